#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <random>

#include "osf/channel.hpp"

using namespace osf;

namespace {

ChannelLoop ring_loop(double slide = 0.3) {
    // simple closed ring: four quarter turns and four straights
    ChannelBuilder b({{-0.3, -0.5}, 0.0}, 0.12);
    for (int k = 0; k < 4; ++k) {
        b.straight(0.6);
        b.turn(M_PI / 2.0, 0.2);
    }
    {
        Vec2 gap = Vec2{-0.3, -0.5} - b.pose().p;
        double along = gap.dot(b.pose().tangent());
        if (along > 1e-12) b.straight(along);
    }
    return b.finalize(0.45, 0.5, slide);
}

} // namespace

TEST_CASE("profile integral exactness") {
    Profile p;
    p.append_const(0.5, 2.0);
    p.append_blend(0.4, 2.0, 1.0);
    p.append_const(0.3, 1.0);
    CHECK(p.value(0.2) == doctest::Approx(2.0));
    CHECK(p.value(0.7) == doctest::Approx(1.5).epsilon(1e-12)); // midpoint of blend
    CHECK(p.integral(0.5) == doctest::Approx(1.0));
    CHECK(p.total_integral() == doctest::Approx(1.0 + 0.4 * 1.5 + 0.3));
    // derivative consistency by finite differences
    for (double s : {0.1, 0.55, 0.71, 0.93, 1.1}) {
        double h = 1e-6;
        double fd = (p.value(s + h) - p.value(s - h)) / (2 * h);
        CHECK(p.deriv(s) == doctest::Approx(fd).epsilon(1e-5));
        double fdi = (p.integral(s + h) - p.integral(s - h)) / (2 * h);
        CHECK(p.value(s) == doctest::Approx(fdi).epsilon(1e-5));
    }
}

TEST_CASE("ring loop closes and charts invert") {
    ChannelLoop L = ring_loop();
    CHECK(L.length() > 3.0);
    std::mt19937 rng(5);
    std::uniform_real_distribution<double> S(0.0, L.length()), E(-0.45, 0.45);
    for (int k = 0; k < 400; ++k) {
        double s = S(rng), eta = E(rng);
        double xi = L.xi_of_s(s);
        Vec2 p = L.chart_point(xi, eta);
        ChannelLoop::Coords c;
        REQUIRE(L.project(p, c));
        CHECK(c.eta == doctest::Approx(eta).epsilon(1e-7));
        Vec2 q = L.chart_point(c.xi, c.eta);
        CHECK((p - q).norm() < 1e-8);
    }
}

TEST_CASE("chart has unit Jacobian") {
    ChannelLoop L = ring_loop();
    std::mt19937 rng(11);
    std::uniform_real_distribution<double> X(0.0, L.xi_total()), E(-0.4, 0.4);
    for (int k = 0; k < 200; ++k) {
        double xi = X(rng), eta = E(rng);
        double h = 1e-6;
        Vec2 dxi = (L.chart_point(xi + h, eta) - L.chart_point(xi - h, eta)) * (0.5 / h);
        Vec2 det_ = (L.chart_point(xi, eta + h) - L.chart_point(xi, eta - h)) * (0.5 / h);
        double det = dxi.x * det_.y - dxi.y * det_.x;
        CHECK(det == doctest::Approx(1.0).epsilon(5e-4));
    }
}

TEST_CASE("stream field is divergence free and matches grad-perp H") {
    ChannelLoop L = ring_loop();
    std::mt19937 rng(13);
    std::uniform_real_distribution<double> S(0.0, L.length()), E(-0.52, 0.52);
    const double h = 2e-6;
    for (int k = 0; k < 200; ++k) {
        Vec2 p = L.chart_point(L.xi_of_s(S(rng)), E(rng));
        Vec2 vxp = L.stream_field({p.x + h, p.y});
        Vec2 vxm = L.stream_field({p.x - h, p.y});
        Vec2 vyp = L.stream_field({p.x, p.y + h});
        Vec2 vym = L.stream_field({p.x, p.y - h});
        double div = (vxp.x - vxm.x + vyp.y - vym.y) / (2 * h);
        double scale = std::max(1.0, L.stream_field(p).norm() / 0.05);
        CHECK(std::fabs(div) < 2e-4 * scale);
        // field equals grad-perp of the stream function
        double Hxp = L.hamiltonian({p.x + h, p.y});
        double Hxm = L.hamiltonian({p.x - h, p.y});
        double Hyp = L.hamiltonian({p.x, p.y + h});
        double Hym = L.hamiltonian({p.x, p.y - h});
        Vec2 gp{-(Hyp - Hym) / (2 * h), (Hxp - Hxm) / (2 * h)};
        Vec2 v = L.stream_field(p);
        CHECK((v - gp).norm() < 2e-4 * std::max(1.0, v.norm()));
    }
}

TEST_CASE("field vanishes outside the tube") {
    ChannelLoop L = ring_loop();
    CHECK(L.stream_field({0.0, 0.0}).norm() == 0.0);
    CHECK(L.stream_field({0.9, 0.9}).norm() == 0.0);
}

TEST_CASE("horseshoe design validates for small N") {
    for (int N : {2, 3, 4}) {
        HorseshoeDesign d = design_horseshoe(N);
        CHECK(d.min_box_margin > 0.0);
        CHECK(d.min_strip_margin > 0.0);
        // predicted landings alternate between the side boxes
        for (int i = 0; i <= N; ++i) {
            Vec2 img = d.predict_E_point(i, 0.0);
            if (i % 2 == 0) CHECK(img.x > 1.0 / 3.0);
            else CHECK(img.x < -1.0 / 3.0);
            CHECK(std::fabs(img.y) < 0.25);
        }
    }
}

TEST_CASE("horseshoe design validates for larger N" * doctest::skip(false)) {
    for (int N : {6, 8}) {
        HorseshoeDesign d = design_horseshoe(N);
        CHECK(d.min_box_margin > 0.0);
    }
}

TEST_CASE("stage bump integrates to one") {
    double t0 = 0.02, t1 = 0.49;
    int n = 20000;
    double acc = 0.0;
    for (int i = 0; i < n; ++i) {
        double t = t0 + (t1 - t0) * (i + 0.5) / n;
        acc += stage_bump(t, t0, t1) * (t1 - t0) / n;
    }
    CHECK(acc == doctest::Approx(1.0).epsilon(1e-6));
    CHECK(stage_bump(t0, t0, t1) == 0.0);
    CHECK(stage_bump(t1, t0, t1) == 0.0);
}
