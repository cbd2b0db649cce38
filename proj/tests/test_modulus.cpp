#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <random>

#include "osf/modulus.hpp"

using namespace osf;

TEST_CASE("eval examples") {
    Modulus ll = Modulus::log_lipschitz();
    double s = std::exp(-2.0);
    CHECK(ll.eval(s) == doctest::Approx(2.0 * std::exp(-2.0)));
    CHECK(ll.eval(0.0) == 0.0);
    Modulus h = Modulus::holder(0.5);
    CHECK(h.eval(0.04) == doctest::Approx(0.2));
    // affine extension is continuous and C1 at the crossover
    double eps = 1e-9;
    CHECK(ll.eval(s + eps) == doctest::Approx(ll.eval(s - eps)).epsilon(1e-6));
    CHECK(ll.derivative(s + eps) == doctest::Approx(ll.derivative(s - eps)).epsilon(1e-5));
}

TEST_CASE("check_osgood verdicts") {
    OsgoodReport r1 = check_osgood(Modulus::log_lipschitz(), 32);
    CHECK(r1.is_increasing);
    CHECK(r1.is_concave);
    CHECK(r1.integral_diverges == DivergenceVerdict::Yes);
    CHECK(r1.non_lipschitz);

    OsgoodReport r2 = check_osgood(Modulus::linear(), 32);
    CHECK(r2.integral_diverges == DivergenceVerdict::Yes);
    CHECK_FALSE(r2.non_lipschitz); // s/w(s) = 1 does not vanish

    OsgoodReport r3 = check_osgood(Modulus::holder(0.5), 32);
    CHECK(r3.integral_diverges == DivergenceVerdict::No);

    // shallow ladders cannot distinguish the slow log-log growth yet
    OsgoodReport r4 = check_osgood(Modulus::log_lipschitz(), 12);
    CHECK(r4.integral_diverges != DivergenceVerdict::No);

    CHECK_THROWS_AS(check_osgood(Modulus::linear(), 3), DomainError);
}

TEST_CASE("partial sums grow like log log for the log-Lipschitz modulus") {
    OsgoodReport r = check_osgood(Modulus::log_lipschitz(), 30);
    // increments of int over [2^-k, 2^-k+1] behave like ln(k/(k-1)) deep down
    for (int k = 20; k < 29; ++k) {
        double incr = r.partial_sums[k] - r.partial_sums[k - 1];
        double model = std::log((k + 1.0) / k);
        CHECK(incr == doctest::Approx(model).epsilon(0.10));
    }
}

TEST_CASE("osgood G closed forms and identity") {
    Modulus ll = Modulus::log_lipschitz();
    CHECK(ll.osgood_G(1.0) == doctest::Approx(0.0));
    // frozen oracle: on the pure log region the antiderivative is -ln(-ln t),
    // so G(e^-4) - G(e^-2) = -(ln 4 - ln 2) = -ln 2
    double diff = ll.osgood_G(std::exp(-4.0)) - ll.osgood_G(std::exp(-2.0));
    CHECK(diff == doctest::Approx(-std::log(2.0)).epsilon(1e-10));
    // quadrature cross-check of the same value
    double quad = adaptive_quad([&](double t) { return 1.0 / ll.eval(t); },
                                std::exp(-4.0), std::exp(-2.0), 1e-11);
    CHECK(diff == doctest::Approx(-quad).epsilon(1e-8));
    // first-order expansion just above 1
    double s = 1.0 + 1e-6;
    CHECK(ll.osgood_G(s) == doctest::Approx((s - 1.0) / ll.eval(1.0)).epsilon(1e-4));
    CHECK_THROWS_AS(ll.osgood_G(0.0), DomainError);
}

TEST_CASE("G strictly increasing") {
    std::mt19937 rng(17);
    std::uniform_real_distribution<double> U(1e-6, std::sqrt(2.0));
    for (const Modulus& m : {Modulus::log_lipschitz(), Modulus::linear(),
                             Modulus::power_log(0.7), Modulus::holder(0.5)}) {
        for (int k = 0; k < 2000; ++k) {
            double a = U(rng), b = U(rng);
            if (a > b) std::swap(a, b);
            if (b - a < 1e-9) continue;
            CHECK(m.osgood_G(a) < m.osgood_G(b));
        }
    }
}

TEST_CASE("bihari bound examples") {
    Modulus ll = Modulus::log_lipschitz();
    double a = 0.01;
    CHECK(ll.bihari_bound(a, 0.0) == doctest::Approx(a));
    // closed form on the log region: d = a^(exp(-B))
    double d = ll.bihari_bound(std::exp(-4.0), std::log(2.0));
    CHECK(d == doctest::Approx(std::exp(-2.0)).epsilon(1e-9));
    // saturation at the torus diameter
    CHECK(ll.bihari_bound(std::exp(-4.0), 1e3) == doctest::Approx(std::sqrt(2.0)));
    CHECK_THROWS_AS(ll.bihari_bound(0.0, 1.0), DomainError);
}

TEST_CASE("bihari bound vs comparison ODE oracle") {
    // independent oracle: integrate d' = w(d) with RK4 for a unit-rate budget
    Modulus ll = Modulus::log_lipschitz();
    double d = std::exp(-4.0);
    double B = std::log(2.0);
    int n = 20000;
    double h = B / n;
    for (int i = 0; i < n; ++i) {
        double k1 = ll.eval(d);
        double k2 = ll.eval(d + 0.5 * h * k1);
        double k3 = ll.eval(d + 0.5 * h * k2);
        double k4 = ll.eval(d + h * k3);
        d += h / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4);
    }
    CHECK(ll.bihari_bound(std::exp(-4.0), B) == doctest::Approx(d).epsilon(1e-7));
}

TEST_CASE("bihari semigroup property") {
    std::mt19937 rng(23);
    std::uniform_real_distribution<double> A(1e-6, 0.05), B(0.0, 0.8);
    Modulus ll = Modulus::log_lipschitz();
    for (int k = 0; k < 500; ++k) {
        double a = A(rng), b1 = B(rng), b2 = B(rng);
        double lhs = ll.bihari_bound(a, b1 + b2);
        double rhs = ll.bihari_bound(ll.bihari_bound(a, b1), b2);
        CHECK(lhs == doctest::Approx(rhs).epsilon(1e-8));
    }
}

TEST_CASE("bihari monotone in both arguments") {
    Modulus ll = Modulus::log_lipschitz();
    std::mt19937 rng(29);
    std::uniform_real_distribution<double> A(1e-6, 0.1), B(0.0, 1.0);
    for (int k = 0; k < 500; ++k) {
        double a1 = A(rng), a2 = A(rng), b1 = B(rng), b2 = B(rng);
        if (a1 > a2) std::swap(a1, a2);
        if (b1 > b2) std::swap(b1, b2);
        CHECK(ll.bihari_bound(a1, b1) <= ll.bihari_bound(a2, b1) + 1e-12);
        CHECK(ll.bihari_bound(a1, b1) <= ll.bihari_bound(a1, b2) + 1e-12);
    }
}

TEST_CASE("omega seminorm on samples") {
    Modulus ll = Modulus::log_lipschitz();
    std::vector<std::pair<TorusPoint, Vec2>> constant;
    for (int i = 0; i < 50; ++i)
        constant.push_back({{-0.9 + 0.03 * i, 0.1}, {0.7, -0.2}});
    CHECK(omega_seminorm(constant, ll, 0.25) == 0.0);

    // f(x,y) = (x, 0) on a fine grid near the origin:
    // max over d < 2^-6 of d / w_LL(d) = 1 / (6 ln 2), approached from below
    std::vector<std::pair<TorusPoint, Vec2>> lin;
    int n = 64;
    for (int i = 0; i <= n; ++i)
        lin.push_back({{-2e-2 + 4e-2 * i / n, 0.0}, {-2e-2 + 4e-2 * i / n, 0.0}});
    double sn = omega_seminorm(lin, ll, std::pow(2.0, -6.0));
    double bound = 1.0 / (6.0 * std::log(2.0));
    CHECK(sn <= bound + 1e-12);
    CHECK(sn > 0.97 * bound);

    CHECK_THROWS_AS(omega_seminorm({{TorusPoint{0, 0}, Vec2{0, 0}}}, ll, 0.1), DomainError);
}

TEST_CASE("seminorm monotone under refinement") {
    Modulus ll = Modulus::log_lipschitz();
    auto f = [](TorusPoint p) { return Vec2{std::sin(2 * p.x) * 0.1, p.y * 0.05}; };
    std::vector<std::pair<TorusPoint, Vec2>> coarse, fine;
    for (int i = 0; i <= 16; ++i) {
        TorusPoint p{-0.3 + 0.6 * i / 16.0, 0.2};
        coarse.push_back({p, f(p)});
    }
    for (int i = 0; i <= 64; ++i) {
        TorusPoint p{-0.3 + 0.6 * i / 64.0, 0.2};
        fine.push_back({p, f(p)});
    }
    CHECK(omega_seminorm(fine, ll, 0.5) >= omega_seminorm(coarse, ll, 0.5));
}

TEST_CASE("modulus JSON fields round-trip through names") {
    CHECK(kind_from_name(kind_name(ModulusKind::PowerLog)) == ModulusKind::PowerLog);
    CHECK_THROWS_AS(kind_from_name("nope"), ValidationError);
}
