#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <random>

#include "osf/field.hpp"
#include "osf/entropy.hpp"
#include "osf/flow.hpp"

using namespace osf;

TEST_CASE("rescaling law is exact") {
    FieldSpec base = build_rotation_bump({0, 0}, 0.2, 0.5);
    auto child = base.blocks().front();
    auto rs = std::make_shared<RescaledBlock>();
    rs->child = child;
    rs->eps = std::pow(2.0, -5);
    rs->center = TorusPoint{0, 0};
    FieldSpec scaled({rs});
    std::mt19937 rng(3);
    std::uniform_real_distribution<double> U(-0.9, 0.9), Tm(0.5, 1.0);
    for (int k = 0; k < 500; ++k) {
        TorusPoint x{U(rng) * 0.15, U(rng) * 0.15};
        double t = Tm(rng);
        Vec2 a = scaled.eval(t, wrap(rs->eps * x.x, rs->eps * x.y));
        Vec2 b = base.eval(t, x) * rs->eps;
        CHECK((a - b).norm() < 1e-15);
    }
}

TEST_CASE("rotation bump support and cutoff gradient bound" *
          doctest::description("support containment and gradient budget")) {
    double rho = 0.1;
    FieldSpec bump = build_rotation_bump({0.1, -0.2}, rho, 0.25);
    // outside 3 rho / 4: identically zero
    for (int k = 0; k < 200; ++k) {
        double ang = 2 * M_PI * k / 200.0;
        TorusPoint p = wrap(0.1 + 0.076 * std::cos(ang), -0.2 + 0.076 * std::sin(ang));
        CHECK(bump.eval(0.9, p).norm() == 0.0);
    }
    // numeric gradient of the cutoff stays below 9 / r
    CutoffSpec chi{rho / 2, 0.75 * rho};
    double worst = 0;
    for (int k = 1; k < 400; ++k) {
        double r = 0.075 * k / 400.0;
        worst = std::max(worst, std::fabs(chi.deriv(r)));
    }
    CHECK(worst <= 9.0 / rho + 1e-12);
}

TEST_CASE("stream stages are divergence free") {
    GatedHorseshoe g = build_horseshoe_block(2, 1.0);
    std::mt19937 rng(11);
    std::uniform_real_distribution<double> U(-0.9, 0.9), Tm(0.0, 1.0);
    int checked = 0;
    for (int k = 0; k < 4000 && checked < 300; ++k) {
        TorusPoint p{U(rng), U(rng)};
        double t = Tm(rng);
        Vec2 v = g.field.eval(t, p);
        if (v.norm() < 1e-9) continue;
        // divergence vanishes to finite-difference tolerance relative to the
        // local gradient magnitude resolved by the same stencil
        double h = 4e-6;
        Vec2 xp = g.field.eval(t, wrap(p.x + h, p.y));
        Vec2 xm = g.field.eval(t, wrap(p.x - h, p.y));
        Vec2 yp = g.field.eval(t, wrap(p.x, p.y + h));
        Vec2 ym = g.field.eval(t, wrap(p.x, p.y - h));
        double grad = std::sqrt((xp - xm).dot(xp - xm) + (yp - ym).dot(yp - ym)) / (2.0 * h);
        double div = divergence_fd(g.field, t, p, h);
        CHECK(std::fabs(div) <= 1e-6 * std::max(1.0, grad));
        ++checked;
    }
    CHECK(checked >= 200);
}

TEST_CASE("horseshoe time-one map matches the analytic transport prediction") {
    GatedHorseshoe g = build_horseshoe_block(2, 1.0);
    auto stage = std::dynamic_pointer_cast<const HorseshoeStageBlock>(g.field.blocks()[0]);
    REQUIRE(stage);
    IntegratorConfig cfg;
    std::mt19937 rng(17);
    std::uniform_real_distribution<double> U(-0.24, 0.24);
    double worst = 0;
    for (int k = 0; k < 24; ++k) {
        TorusPoint p{U(rng), U(rng)};
        Vec2 predicted = stage->design->predict(as_vec(p));
        TorusPoint integrated = flow_to(g.field, p, 1.0, cfg);
        worst = std::max(worst, geodesic_distance(wrap(predicted.x, predicted.y), integrated));
    }
    CHECK(worst < 2e-6);
}

TEST_CASE("certified horseshoe blocks for N in {2,3,4}") {
    for (int n : {2, 3, 4}) {
        GatedHorseshoe g = build_horseshoe_block(n, 1.0);
        CHECK(g.certificate.pass);
        CHECK(g.certificate.margin > 0.0);
        CHECK(g.certificate.entropy_lower_bound == doctest::Approx(std::log((double)n)));
    }
}

TEST_CASE("rescaled horseshoe support and norm scaling") {
    GatedHorseshoe g = build_horseshoe_block(2, std::pow(2.0, -5));
    auto s = g.field.blocks().front()->support();
    REQUIRE(s.has_value());
    CHECK(s->second <= std::pow(2.0, -5));
    CHECK(g.certificate.pass);
}

TEST_CASE("norm estimates: zero and bump fields") {
    Modulus ll = Modulus::log_lipschitz();
    FieldSpec zero;
    CHECK(field_norm_estimate(zero, ll).value == 0.0);

    // envelope form C eta^-1 (rho + rho / w(rho)): the constant is reported
    // and must stay bounded and stable across parameter rescalings
    auto envelope_constant = [&](double rho, double eta) {
        FieldSpec bump = build_rotation_bump({0, 0}, rho, eta);
        SamplingSpec grid;
        grid.support_adapted = true;
        NormEstimate est = field_norm_estimate(bump, ll, grid, NormMode::TimeSup);
        CHECK(est.value > 0.0);
        return est.value * eta / (rho + rho / ll.eval(rho));
    };
    double c1 = envelope_constant(0.1, 0.25);
    double c2 = envelope_constant(0.05, 0.125);
    CHECK(c1 < 16.0);
    CHECK(c2 < 16.0);
    CHECK(c1 / c2 > 0.5);
    CHECK(c1 / c2 < 2.0);
}

TEST_CASE("rescaled block norms decrease along the dyadic ladder") {
    Modulus ll = Modulus::log_lipschitz();
    GatedHorseshoe base = build_horseshoe_block(2, 1.0);
    auto child = base.field.blocks().front();
    double prev = 1e100;
    for (int k = 3; k <= 8; ++k) {
        auto rs = std::make_shared<RescaledBlock>();
        rs->child = child;
        rs->eps = std::pow(2.0, -k);
        FieldSpec f({rs});
        SamplingSpec grid;
        grid.time_samples = 12;
        grid.space_samples = 8;
        grid.support_adapted = true;
        double val = field_norm_estimate(f, ll, grid, NormMode::TimeSup).value;
        CHECK(val < prev);
        prev = val;
    }
}

TEST_CASE("good scale / bad interval") {
    Modulus ll = Modulus::log_lipschitz();
    SUBCASE("zero field") {
        FieldSpec zero;
        OscillationProfile p = good_scale_bad_interval(zero, ll, 0.1, 16, 12);
        CHECK(p.bad_mass == 0.0);
        REQUIRE(p.good_times.size() == 1);
        CHECK(p.good_times[0].lo == doctest::Approx(0.0));
        CHECK(p.good_times[0].hi == doctest::Approx(1.0));
    }
    SUBCASE("smooth field gets the coarsest compliant scale") {
        FieldSpec drift = build_constant_field({0.3, 0.1});
        OscillationProfile p = good_scale_bad_interval(drift, ll, 0.05, 8, 10);
        CHECK(p.scale_r == doctest::Approx(0.5)); // constants have zero oscillation
        CHECK(p.bad_mass == 0.0);
    }
    SUBCASE("field active late with small budget excludes those times") {
        FieldSpec bump = build_rotation_bump({0, 0}, 0.3, 0.1, 1.0);
        double mass = field_norm_estimate(bump, ll, {32, 24, true}).value;
        OscillationProfile p = good_scale_bad_interval(bump, ll, 1.2 * mass + 0.02, 40, 16);
        REQUIRE(!p.good_times.empty());
        CHECK(p.good_times.front().lo == doctest::Approx(0.0));
        CHECK(p.good_times.front().hi >= 0.85);
    }
}

TEST_CASE("infinite entropy truncation: disjoint invariant sub-blocks") {
    InfiniteEntropyField f = build_infinite_entropy_field(4);
    REQUIRE(f.centers.size() == 3);
    for (size_t i = 0; i < f.centers.size(); ++i)
        for (size_t j = i + 1; j < f.centers.size(); ++j)
            CHECK(geodesic_distance(f.centers[i], f.centers[j]) >
                  f.scales[i] + f.scales[j]);
    for (const auto& c : f.block_certificates) CHECK(c.pass);
    // zero outside the union of supports
    std::mt19937 rng(5);
    std::uniform_real_distribution<double> U(-1.0, 1.0);
    int outside = 0;
    for (int k = 0; k < 3000; ++k) {
        TorusPoint p{U(rng), U(rng)};
        bool in_support = false;
        for (size_t i = 0; i < f.centers.size(); ++i)
            if (geodesic_distance(p, f.centers[i]) <= f.scales[i]) in_support = true;
        if (in_support) continue;
        ++outside;
        CHECK(f.field.eval(0.77, p).norm() == 0.0);
    }
    CHECK(outside > 2500);
    CHECK(f.tail_bound > 0.0);
    CHECK(f.tail_bound < 0.25);
}

TEST_CASE("field JSON metadata helpers: seams are sorted unique") {
    FieldSpec bump = build_rotation_bump({0, 0}, 0.1, 0.25);
    auto s = bump.seams();
    CHECK(std::is_sorted(s.begin(), s.end()));
    for (size_t i = 1; i < s.size(); ++i) CHECK(s[i] != s[i - 1]);
}
