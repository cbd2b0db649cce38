#include "osf/torus.hpp"

namespace osf {

TorusPoint geodesic_midpoint(TorusPoint p, TorusPoint q) {
    Vec2 d = wrap_delta(p, q);
    double dist = d.norm();
    if (dist >= 1.0)
        throw AmbiguousGeodesic("geodesic_midpoint: d(p,q) >= 1 (injectivity radius)");
    return wrap(p.x + 0.5 * d.x, p.y + 0.5 * d.y);
}

namespace {
// coordinate of p relative to the box, unwrapped through the box center
Vec2 unwrap_to_box(const Box& b, TorusPoint p) {
    TorusPoint c = b.center();
    Vec2 d = wrap_delta(c, p);
    return {c.x + d.x, c.y + d.y};
}
} // namespace

bool box_contains(const Box& b, TorusPoint p, double margin) {
    Vec2 u = unwrap_to_box(b, p);
    double xl = b.x_min + margin, xh = b.x_max - margin;
    double yl = b.y_min + margin, yh = b.y_max - margin;
    if (b.open)
        return u.x > xl && u.x < xh && u.y > yl && u.y < yh;
    return u.x >= xl && u.x <= xh && u.y >= yl && u.y <= yh;
}

double box_clearance(const Box& b, TorusPoint p) {
    Vec2 u = unwrap_to_box(b, p);
    double dx = std::min(u.x - b.x_min, b.x_max - u.x);
    double dy = std::min(u.y - b.y_min, b.y_max - u.y);
    return std::min(dx, dy);
}

} // namespace osf
