#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <cstring>
#include <random>

#include "osf/entropy.hpp"
#include "osf/field.hpp"
#include "osf/flow.hpp"

using namespace osf;

TEST_CASE("identity and translation flows") {
    IntegratorConfig cfg;
    FieldSpec zero;
    CHECK(flow_to(zero, {0.3, -0.7}, 1.0, cfg) == TorusPoint{0.3, -0.7});

    FieldSpec drift = build_constant_field({1.0, 0.0});
    TorusPoint out = flow_to(drift, {0.5, 0.25}, 1.0, cfg);
    CHECK(out.x == doctest::Approx(-0.5).epsilon(1e-10)); // wrapped across the seam
    CHECK(out.y == doctest::Approx(0.25));
}

TEST_CASE("rotation bump sends points to their antipode") {
    double rho = 0.1;
    TorusPoint c{0.0, 0.0};
    FieldSpec bump = build_rotation_bump(c, rho, 0.25);
    IntegratorConfig cfg;
    std::mt19937 rng(3);
    std::uniform_real_distribution<double> A(0, 2 * M_PI), R(0.0, 0.5 * rho);
    double worst = 0;
    for (int k = 0; k < 60; ++k) {
        double a = A(rng), r = R(rng);
        TorusPoint p = wrap(c.x + r * std::cos(a), c.y + r * std::sin(a));
        TorusPoint q = flow_to(bump, p, 1.0, cfg);
        TorusPoint want = wrap(c.x - r * std::cos(a), c.y - r * std::sin(a));
        worst = std::max(worst, geodesic_distance(q, want));
    }
    CHECK(worst < 1e-8);
    // the center is fixed, points outside the support are fixed exactly
    CHECK(geodesic_distance(flow_to(bump, c, 1.0, cfg), c) < 1e-12);
    TorusPoint far{0.4, 0.4};
    CHECK(flow_to(bump, far, 1.0, cfg) == far);
}

TEST_CASE("flow group property: integrate to n equals n-fold composition") {
    GatedHorseshoe g = build_horseshoe_block(2, 0.5);
    IntegratorConfig cfg;
    std::mt19937 rng(7);
    std::uniform_real_distribution<double> U(-0.6, 0.6);
    double worst = 0;
    for (int k = 0; k < 20; ++k) {
        TorusPoint p{U(rng), U(rng)};
        TorusPoint direct = flow_to(g.field, p, 3.0, cfg);
        TorusPoint composed = p;
        for (int i = 0; i < 3; ++i) composed = flow_to(g.field, composed, 1.0, cfg);
        worst = std::max(worst, geodesic_distance(direct, composed));
    }
    CHECK(worst < 1e-5);
}

TEST_CASE("reversibility against the time-reversed field") {
    // integrate the bump forward, then the reversed bump forward again
    double rho = 0.12;
    FieldSpec fwd = build_rotation_bump({0.1, 0.2}, rho, 0.3, 1.0, M_PI / 2);
    FieldSpec rev = build_rotation_bump({0.1, 0.2}, rho, 0.3, 0.3, -M_PI / 2);
    // rev runs the opposite rotation over the mirrored window (1 - t)
    IntegratorConfig cfg;
    std::mt19937 rng(9);
    std::uniform_real_distribution<double> U(-0.04, 0.04);
    for (int k = 0; k < 30; ++k) {
        TorusPoint p = wrap(0.1 + U(rng), 0.2 + U(rng));
        TorusPoint q = flow_to(fwd, p, 1.0, cfg);
        TorusPoint back = flow_to(rev, q, 1.0, cfg);
        CHECK(geodesic_distance(back, p) < 1e-7);
    }
}

TEST_CASE("near periodic point search") {
    IntegratorConfig cfg;
    SUBCASE("zero field: every point is fixed") {
        FieldSpec zero;
        PeriodicOrbitResult r = find_near_periodic_point(zero, 1e-6, 4, 4, cfg);
        CHECK(r.period == 1);
        CHECK(r.closure_gap == 0.0);
    }
    SUBCASE("rational drift returns exactly after two periods") {
        FieldSpec drift = build_constant_field({1.0, 0.0});
        PeriodicOrbitResult r = find_near_periodic_point(drift, 1e-6, 4, 8, cfg);
        CHECK(r.period == 2);
        CHECK(r.closure_gap < 1e-9);
    }
    SUBCASE("irrational drift: minimal gap pair matches the exhaustive oracle") {
        double speed = 2.0 * (std::sqrt(2.0) - 1.0);
        FieldSpec drift = build_constant_field({speed, 0.0});
        int m_max = 20;
        PeriodicOrbitResult r = find_near_periodic_point(drift, 0.2, 2, m_max, cfg);
        // oracle: scan i < j <= first-hit orbit segment of the same seed
        TorusPoint seed = r.seed;
        std::vector<TorusPoint> orbit{seed};
        bool hit = false;
        while (!hit) {
            orbit.push_back(flow_to(drift, orbit.back(), 1.0, cfg));
            for (size_t i = 0; i + 1 < orbit.size() && !hit; ++i)
                if (geodesic_distance(orbit[i], orbit.back()) < 0.2) hit = true;
            REQUIRE(orbit.size() <= (size_t)m_max + 1);
        }
        int bi = 0, bj = 1;
        double best = 1e9;
        for (size_t j = 1; j < orbit.size(); ++j)
            for (size_t i = 0; i < j; ++i) {
                double d = geodesic_distance(orbit[i], orbit[j]);
                if (d < best - 1e-15) {
                    best = d;
                    bi = (int)i;
                    bj = (int)j;
                }
            }
        CHECK(r.period == bj - bi);
        CHECK(r.closure_gap == doctest::Approx(best).epsilon(1e-9));
        // separation conditions of the minimizing pair
        CHECK(r.min_separation >= r.closure_gap - 1e-12);
    }
    SUBCASE("no recurrence raises") {
        FieldSpec drift = build_constant_field({2.0 * (std::sqrt(2.0) - 1.0), 0.0});
        CHECK_THROWS_AS(find_near_periodic_point(drift, 1e-4, 2, 3, cfg),
                        RecurrenceNotFound);
    }
}

TEST_CASE("deviation check against the Bihari envelope") {
    Modulus ll = Modulus::log_lipschitz();
    IntegratorConfig cfg;
    FieldSpec v = build_constant_field({0.35, 0.1});
    SUBCASE("w equals v") {
        DeviationReport rep = deviation_check(v, v, ll, 64, 1.0, cfg, 0.0, -1.0);
        CHECK(rep.max_deviation == 0.0);
        CHECK(rep.violations == 0);
    }
    SUBCASE("w = v + small bump stays below the bound") {
        FieldSpec bump = build_rotation_bump({0.3, -0.2}, 0.05, 0.3);
        FieldSpec w = v.plus(bump);
        DeviationReport rep = deviation_check(v, w, ll, 128, 1.0, cfg);
        CHECK(rep.violations == 0);
        CHECK(rep.max_ratio <= 1.0);
        CHECK(rep.max_deviation > 0.0);
    }
}

TEST_CASE("osgood continuity of the flow") {
    Modulus ll = Modulus::log_lipschitz();
    IntegratorConfig cfg;
    GatedHorseshoe g = build_horseshoe_block(2, 0.25);
    SamplingSpec grid;
    grid.time_samples = 24;
    grid.space_samples = 16;
    grid.support_adapted = true;
    double budget = field_norm_estimate(g.field, ll, grid).value * 1.05;
    std::mt19937 rng(21);
    std::uniform_real_distribution<double> U(-0.3, 0.3), L(std::log(1e-6), std::log(1e-2));
    int violations = 0;
    for (int k = 0; k < 400; ++k) {
        TorusPoint x{U(rng), U(rng)};
        double d0 = std::exp(L(rng));
        double ang = U(rng) * 10.0;
        TorusPoint y = wrap(x.x + d0 * std::cos(ang), x.y + d0 * std::sin(ang));
        double d1 = geodesic_distance(flow_to(g.field, x, 1.0, cfg),
                                      flow_to(g.field, y, 1.0, cfg));
        if (d1 > ll.bihari_bound(geodesic_distance(x, y), budget)) ++violations;
    }
    CHECK(violations == 0);
}

TEST_CASE("map grids and oracles") {
    IntegratorConfig cfg;
    FieldSpec zero;
    MapGrid g = time_one_map(zero, 8, cfg);
    for (int i = 0; i < 8; ++i)
        for (int j = 0; j < 8; ++j)
            CHECK(geodesic_distance(g.input(i, j), g.image(i, j)) == 0.0);
    CHECK_THROWS_AS(time_one_map(zero, 1, cfg), DomainError);
}

TEST_CASE("exp gradient diagnostic") {
    FieldSpec zero;
    ExpGradientResult r0 = exp_gradient_diagnostic(zero, 1.0, 32, 4);
    CHECK(r0.value == doctest::Approx(4.0)); // exp(0) over the cell of area 4

    FieldSpec bump = build_rotation_bump({0, 0}, 0.2, 0.5);
    double beta = 0.05;
    ExpGradientResult r1 = exp_gradient_diagnostic(bump, beta, 64, 8);
    CHECK(r1.value >= 4.0);
    CHECK_FALSE(r1.overflow);
    // rescaled family decreases toward the cell area
    auto child = bump.blocks().front();
    double prev = 1e300;
    for (int k = 1; k <= 3; ++k) {
        auto rs = std::make_shared<RescaledBlock>();
        rs->child = child;
        rs->eps = std::pow(2.0, -k);
        FieldSpec f({rs});
        ExpGradientResult rk = exp_gradient_diagnostic(f, beta, 96, 6);
        CHECK(rk.value < prev);
        CHECK(rk.value >= 4.0 - 1e-9);
        prev = rk.value;
    }
}

namespace {
// pathological block whose values never resolve under refinement
struct NoisyBlock : Block {
    Kind kind() const override { return Kind::Constant; }
    Vec2 eval(double t, TorusPoint p) const override {
        auto hash_bit = [](double v) {
            unsigned long long u;
            std::memcpy(&u, &v, 8);
            u ^= u >> 33;
            u *= 0xff51afd7ed558ccdULL;
            u ^= u >> 33;
            return (double)(u & 0xffff) / 65535.0 - 0.5;
        };
        return Vec2{hash_bit(t + p.x), hash_bit(t - p.y)} * 1e4;
    }
    void seams(std::vector<double>&) const override {}
    double max_speed() const override { return 1e4; }
};
} // namespace

TEST_CASE("step underflow reported") {
    FieldSpec noisy({std::make_shared<NoisyBlock>()});
    IntegratorConfig cfg;
    cfg.rel_tol = 1e-12;
    cfg.abs_tol = 1e-14;
    CHECK_THROWS_AS(integrate(noisy, {0.1, 0.1}, 0.0, 1.0, cfg), StepUnderflow);
}

TEST_CASE("orbit path interpolation") {
    IntegratorConfig cfg;
    FieldSpec drift = build_constant_field({0.5, -0.25});
    auto orbit = compute_orbit(drift, {0.0, 0.0}, 2.0, cfg);
    for (double t : {0.0, 0.3, 0.77, 1.5, 2.0}) {
        TorusPoint want = wrap(0.5 * t, -0.25 * t);
        CHECK(geodesic_distance(orbit->at(t), want) < 1e-9);
    }
}
