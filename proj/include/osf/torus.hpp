#ifndef OSF_TORUS_HPP
#define OSF_TORUS_HPP

#include <cmath>
#include "osf/errors.hpp"

namespace osf {

// Flat 2-torus identified with the cell [-1,1)^2 (side length 2).
// All geometry below is exact modulo the usual floating-point wrap at the seam.

struct Vec2 {
    double x = 0.0, y = 0.0;
    Vec2 operator+(Vec2 o) const { return {x + o.x, y + o.y}; }
    Vec2 operator-(Vec2 o) const { return {x - o.x, y - o.y}; }
    Vec2 operator*(double c) const { return {x * c, y * c}; }
    Vec2 operator-() const { return {-x, -y}; }
    double norm() const { return std::hypot(x, y); }
    double dot(Vec2 o) const { return x * o.x + y * o.y; }
    // rotate by +90 degrees
    Vec2 perp() const { return {-y, x}; }
};
inline Vec2 operator*(double c, Vec2 v) { return v * c; }

// canonical representative in [-1,1)
inline double wrap_coord(double v) {
    double w = v - 2.0 * std::floor((v + 1.0) * 0.5);
    // floor rounding can leave w == 1.0 for v just below an odd integer
    if (w >= 1.0) w -= 2.0;
    if (w < -1.0) w += 2.0;
    return w;
}

struct TorusPoint {
    double x = 0.0, y = 0.0;
    bool operator==(const TorusPoint&) const = default;
};

inline TorusPoint wrap(double x, double y) { return {wrap_coord(x), wrap_coord(y)}; }
inline TorusPoint wrap(Vec2 v) { return wrap(v.x, v.y); }
inline Vec2 as_vec(TorusPoint p) { return {p.x, p.y}; }
inline TorusPoint translate(TorusPoint p, Vec2 d) { return wrap(p.x + d.x, p.y + d.y); }

// shortest representative of the displacement q - p, components in [-1,1)
inline Vec2 wrap_delta(TorusPoint p, TorusPoint q) {
    return {wrap_coord(q.x - p.x), wrap_coord(q.y - p.y)};
}

inline double geodesic_distance(TorusPoint p, TorusPoint q) {
    Vec2 d = wrap_delta(p, q);
    double ax = std::fabs(d.x), ay = std::fabs(d.y);
    // |wrap_coord| <= 1 and min(|d|, 2-|d|) is attained there
    return std::hypot(ax, ay);
}

// midpoint of the unique minimizing geodesic; requires d(p,q) < 1 (injectivity radius)
TorusPoint geodesic_midpoint(TorusPoint p, TorusPoint q);

struct Box {
    double x_min = 0, x_max = 0, y_min = 0, y_max = 0;
    bool open = false; // whether the boundary is excluded
    double width() const { return x_max - x_min; }
    double height() const { return y_max - y_min; }
    TorusPoint center() const { return {0.5 * (x_min + x_max), 0.5 * (y_min + y_max)}; }
};

// true iff p lies in b shrunk inward by margin (negative margin expands);
// containment is wrap-aware through the box center
bool box_contains(const Box& b, TorusPoint p, double margin = 0.0);

// signed clearance of p to the complement of b (positive inside, negative outside);
// for open boxes "inside" means strictly inside
double box_clearance(const Box& b, TorusPoint p);

} // namespace osf

#endif
