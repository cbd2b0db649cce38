#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <random>

#include "osf/torus.hpp"

using namespace osf;

namespace {
// independent oracle: minimum over the 9 integer shifts in {-2,0,2}^2
double brute_distance(TorusPoint p, TorusPoint q) {
    double best = 1e99;
    for (int i = -1; i <= 1; ++i)
        for (int j = -1; j <= 1; ++j) {
            double dx = q.x + 2.0 * i - p.x;
            double dy = q.y + 2.0 * j - p.y;
            best = std::min(best, std::hypot(dx, dy));
        }
    return best;
}
} // namespace

TEST_CASE("geodesic distance examples") {
    CHECK(geodesic_distance({0, 0}, {0, 0}) == doctest::Approx(0.0));
    CHECK(geodesic_distance({-0.9, 0}, {0.9, 0}) == doctest::Approx(0.2));
    CHECK(geodesic_distance({0, 0}, {1, 1}) == doctest::Approx(std::sqrt(2.0)));
}

TEST_CASE("distance agrees with the 9-shift brute force") {
    std::mt19937 rng(7);
    std::uniform_real_distribution<double> U(-1.0, 1.0);
    double worst = 0.0;
    for (int k = 0; k < 100000; ++k) {
        TorusPoint p{U(rng), U(rng)}, q{U(rng), U(rng)};
        worst = std::max(worst, std::fabs(geodesic_distance(p, q) - brute_distance(p, q)));
    }
    CHECK(worst < 1e-12);
}

TEST_CASE("distance metric properties on sampled triples") {
    std::mt19937 rng(11);
    std::uniform_real_distribution<double> U(-1.0, 1.0);
    for (int k = 0; k < 20000; ++k) {
        TorusPoint a{U(rng), U(rng)}, b{U(rng), U(rng)}, c{U(rng), U(rng)};
        double ab = geodesic_distance(a, b);
        CHECK(ab == doctest::Approx(geodesic_distance(b, a)));
        CHECK(ab <= std::sqrt(2.0) + 1e-12);
        CHECK(ab + geodesic_distance(b, c) + 1e-12 >= geodesic_distance(a, c));
    }
}

TEST_CASE("wrap canonical and idempotent") {
    std::mt19937 rng(3);
    std::uniform_real_distribution<double> U(-40.0, 40.0);
    for (int k = 0; k < 20000; ++k) {
        TorusPoint p = wrap(U(rng), U(rng));
        CHECK(p.x >= -1.0);
        CHECK(p.x < 1.0);
        CHECK(p.y >= -1.0);
        CHECK(p.y < 1.0);
        TorusPoint q = wrap(p.x, p.y);
        CHECK(p.x == q.x);
        CHECK(p.y == q.y);
    }
}

TEST_CASE("midpoint examples") {
    TorusPoint m1 = geodesic_midpoint({0, 0}, {0.5, 0});
    CHECK(m1.x == doctest::Approx(0.25));
    CHECK(m1.y == doctest::Approx(0.0));
    TorusPoint m2 = geodesic_midpoint({-0.9, 0}, {0.9, 0});
    CHECK(m2.x == doctest::Approx(-1.0)); // canonical form of (1.0, 0)
    CHECK(m2.y == doctest::Approx(0.0));
    TorusPoint m3 = geodesic_midpoint({0, 0}, {0, 0});
    CHECK(m3.x == doctest::Approx(0.0));
}

TEST_CASE("midpoint property and ambiguity guard") {
    std::mt19937 rng(5);
    std::uniform_real_distribution<double> U(-1.0, 1.0);
    int checked = 0;
    for (int k = 0; k < 60000 && checked < 20000; ++k) {
        TorusPoint p{U(rng), U(rng)}, q{U(rng), U(rng)};
        double d = geodesic_distance(p, q);
        if (d >= 1.0) {
            CHECK_THROWS_AS(geodesic_midpoint(p, q), AmbiguousGeodesic);
            continue;
        }
        TorusPoint m = geodesic_midpoint(p, q);
        CHECK(std::fabs(geodesic_distance(p, m) - 0.5 * d) < 1e-12);
        CHECK(std::fabs(geodesic_distance(m, q) - 0.5 * d) < 1e-12);
        ++checked;
    }
    CHECK(checked > 10000);
}

TEST_CASE("box containment with margin") {
    Box d1{1.0 / 3.0, 0.5, -0.25, 0.25, true};
    CHECK(box_contains(d1, {0.4, 0.0}, 0.0));
    CHECK_FALSE(box_contains(d1, {0.4, 0.0}, 0.1)); // exactly 0.1 from x_max
    Box cell{-1.0, 1.0, -1.0, 1.0, false};
    CHECK(box_contains(cell, {0.73, -0.99}, 0.0));
    // wrap-aware: a box across the seam
    Box seam{0.9, 1.1, -0.1, 0.1, false};
    CHECK(box_contains(seam, {-0.95, 0.0}, 0.0));
    CHECK(box_clearance(seam, {-0.95, 0.0}) == doctest::Approx(0.05));
}
