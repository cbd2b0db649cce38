#include "osf/modulus.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace osf {

std::string kind_name(ModulusKind k) {
    switch (k) {
        case ModulusKind::LogLipschitz: return "log_lipschitz";
        case ModulusKind::PowerLog: return "power_log";
        case ModulusKind::Holder: return "holder";
        case ModulusKind::Linear: return "linear";
    }
    return "?";
}

ModulusKind kind_from_name(const std::string& s) {
    if (s == "log_lipschitz") return ModulusKind::LogLipschitz;
    if (s == "power_log") return ModulusKind::PowerLog;
    if (s == "holder") return ModulusKind::Holder;
    if (s == "linear") return ModulusKind::Linear;
    throw ValidationError("unknown modulus kind: " + s);
}

Modulus::Modulus(ModulusKind k, double crossover, double param)
    : kind_(k), crossover_(crossover), param_(param) {
    if (k == ModulusKind::LogLipschitz || k == ModulusKind::PowerLog) {
        if (!(crossover > 0.0 && crossover < std::exp(-1.0)))
            throw DomainError("modulus crossover must lie in (0, e^-1) to keep the slope positive");
        if (k == ModulusKind::PowerLog && !(param > 0.0 && param <= 1.0))
            throw DomainError("power_log exponent must lie in (0,1]");
    }
    if (k == ModulusKind::Holder && !(param > 0.0 && param < 1.0))
        throw DomainError("holder alpha must lie in (0,1)");
    ext_value_ = core(crossover_);
    ext_slope_ = core_deriv(crossover_);
}

Modulus Modulus::log_lipschitz(double crossover) {
    return Modulus(ModulusKind::LogLipschitz, crossover, 0.0);
}
Modulus Modulus::power_log(double exponent, double crossover) {
    return Modulus(ModulusKind::PowerLog, crossover, exponent);
}
Modulus Modulus::holder(double alpha) { return Modulus(ModulusKind::Holder, 1.0, alpha); }
Modulus Modulus::linear() { return Modulus(ModulusKind::Linear, 1.0, 0.0); }

double Modulus::core(double s) const {
    switch (kind_) {
        case ModulusKind::LogLipschitz: return -s * std::log(s);
        case ModulusKind::PowerLog: return s * std::pow(-std::log(s), param_);
        case ModulusKind::Holder: return std::pow(s, param_);
        case ModulusKind::Linear: return s;
    }
    return 0;
}

double Modulus::core_deriv(double s) const {
    switch (kind_) {
        case ModulusKind::LogLipschitz: return -std::log(s) - 1.0;
        case ModulusKind::PowerLog: {
            double u = -std::log(s);
            return std::pow(u, param_) - param_ * std::pow(u, param_ - 1.0);
        }
        case ModulusKind::Holder: return param_ * std::pow(s, param_ - 1.0);
        case ModulusKind::Linear: return 1.0;
    }
    return 0;
}

bool Modulus::osgood_non_lipschitz_kind() const {
    return kind_ == ModulusKind::LogLipschitz || kind_ == ModulusKind::PowerLog;
}

double Modulus::eval(double s) const {
    if (s < 0.0) throw DomainError("modulus eval: s < 0");
    if (s == 0.0) return 0.0;
    bool has_core = (kind_ == ModulusKind::LogLipschitz || kind_ == ModulusKind::PowerLog);
    if (!has_core) return core(s);
    if (s <= crossover_) return core(s);
    return ext_value_ + ext_slope_ * (s - crossover_);
}

double Modulus::derivative(double s) const {
    if (s <= 0.0) throw DomainError("modulus derivative: s <= 0");
    bool has_core = (kind_ == ModulusKind::LogLipschitz || kind_ == ModulusKind::PowerLog);
    if (!has_core) return core_deriv(s);
    if (s <= crossover_) return core_deriv(s);
    return ext_slope_;
}

double Modulus::core_G_anti(double s) const {
    // antiderivative of 1/w on the core region
    switch (kind_) {
        case ModulusKind::LogLipschitz:
            return -std::log(-std::log(s));
        case ModulusKind::PowerLog: {
            double u = -std::log(s);
            if (param_ == 1.0) return -std::log(u);
            return -std::pow(u, 1.0 - param_) / (1.0 - param_);
        }
        case ModulusKind::Holder:
            return std::pow(s, 1.0 - param_) / (1.0 - param_);
        case ModulusKind::Linear:
            return std::log(s);
    }
    return 0;
}

double Modulus::osgood_G(double s) const {
    if (s <= 0.0) throw DomainError("osgood_G: s <= 0");
    if (kind_ == ModulusKind::Holder || kind_ == ModulusKind::Linear)
        return core_G_anti(s) - core_G_anti(1.0);
    // piecewise: core below the crossover, affine extension above
    auto ext_anti = [&](double t) {
        // integral of 1/(v + k (t - c)) with v = ext_value_, k = ext_slope_
        return std::log(ext_value_ + ext_slope_ * (t - crossover_)) / ext_slope_;
    };
    auto G_from_crossover = [&](double t) {
        // int_{crossover}^{t} 1/w
        if (t >= crossover_) return ext_anti(t) - ext_anti(crossover_);
        return core_G_anti(t) - core_G_anti(crossover_);
    };
    return G_from_crossover(s) - G_from_crossover(1.0);
}

double Modulus::bihari_bound(double initial_gap, double budget) const {
    if (initial_gap <= 0.0) throw DomainError("bihari_bound: initial_gap <= 0");
    if (budget < 0.0) throw DomainError("bihari_bound: budget < 0");
    const double cap = std::sqrt(2.0);
    if (initial_gap >= cap) return cap;
    if (budget == 0.0) return initial_gap;
    double target = osgood_G(initial_gap) + budget;
    if (osgood_G(cap) <= target) return cap;
    // monotone root find for G(s) = target on [initial_gap, cap]
    double lo = initial_gap, hi = cap;
    for (int it = 0; it < 200; ++it) {
        double mid = 0.5 * (lo + hi);
        if (osgood_G(mid) < target) lo = mid; else hi = mid;
        if (hi - lo < 1e-15 * std::max(1.0, hi)) break;
    }
    return 0.5 * (lo + hi);
}

double adaptive_quad(const std::function<double(double)>& f, double a, double b,
                     double rel_tol, int max_depth) {
    struct Rec {
        static double simpson(double a, double b, double fa, double fm, double fb) {
            return (b - a) / 6.0 * (fa + 4.0 * fm + fb);
        }
        static double go(const std::function<double(double)>& f, double a, double b,
                         double fa, double fm, double fb, double whole, double tol, int depth) {
            double m = 0.5 * (a + b);
            double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
            double flm = f(lm), frm = f(rm);
            double left = simpson(a, m, fa, flm, fm);
            double right = simpson(m, b, fm, frm, fb);
            if (depth <= 0 || std::fabs(left + right - whole) <= 15.0 * tol)
                return left + right + (left + right - whole) / 15.0;
            return go(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1) +
                   go(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1);
        }
    };
    if (a == b) return 0.0;
    double fa = f(a), fb = f(b), fm = f(0.5 * (a + b));
    double whole = Rec::simpson(a, b, fa, fm, fb);
    double tol = std::max(std::fabs(whole), 1.0) * rel_tol;
    return Rec::go(f, a, b, fa, fm, fb, whole, tol, max_depth);
}

OsgoodReport check_osgood(const Modulus& m, int depth) {
    if (depth < 4) throw DomainError("check_osgood: depth must be >= 4");
    OsgoodReport rep;

    // monotone and concave checks on a mixed dyadic/linear grid
    std::vector<double> grid;
    for (int k = depth; k >= 1; --k) grid.push_back(std::pow(2.0, -k));
    for (int i = 1; i <= 64; ++i) grid.push_back(i / 64.0 * std::sqrt(2.0));
    std::sort(grid.begin(), grid.end());
    rep.is_increasing = true;
    rep.is_concave = true;
    double prev = 0.0, prev_s = 0.0;
    double prev_slope = std::numeric_limits<double>::infinity();
    for (double s : grid) {
        double v = m.eval(s);
        if (v < prev - 1e-14) rep.is_increasing = false;
        double slope = (v - prev) / (s - prev_s);
        if (slope > prev_slope + 1e-9) rep.is_concave = false;
        prev_slope = slope;
        prev = v;
        prev_s = s;
    }
    if (!rep.is_increasing) throw NonMonotone("check_osgood: modulus not increasing on sampled grid");

    // partial integrals int_{2^-k}^1 1/w by adaptive quadrature
    double acc = 0.0;
    double hi = 1.0;
    for (int k = 1; k <= depth; ++k) {
        double lo = std::pow(2.0, -k);
        acc += adaptive_quad([&](double t) { return 1.0 / m.eval(t); }, lo, hi, 1e-10);
        rep.partial_sums.push_back(acc);
        hi = lo;
    }

    // growth-rate trichotomy on the last (up to) 8 increments
    std::vector<double> incr;
    for (size_t i = 1; i < rep.partial_sums.size(); ++i)
        incr.push_back(rep.partial_sums[i] - rep.partial_sums[i - 1]);
    int look = std::min<int>(8, (int)incr.size() - 1);
    double rmin = std::numeric_limits<double>::infinity(), rmax = 0.0;
    for (int i = (int)incr.size() - look; i < (int)incr.size(); ++i) {
        double r = incr[i] / incr[i - 1];
        rmin = std::min(rmin, r);
        rmax = std::max(rmax, r);
    }
    const double thresh = 0.95;
    if (rmin >= thresh) rep.integral_diverges = DivergenceVerdict::Yes;
    else if (rmax < thresh && rmax - rmin < 0.03)
        rep.integral_diverges = DivergenceVerdict::No; // steady geometric tail
    else rep.integral_diverges = DivergenceVerdict::Inconclusive;

    // s/w(s) trend on the dyadic ladder
    for (int k = 1; k <= depth; ++k) {
        double s = std::pow(2.0, -k);
        rep.ratio_sequence.push_back(s / m.eval(s));
    }
    rep.non_lipschitz = rep.ratio_sequence.back() < 0.25 * rep.ratio_sequence.front();
    return rep;
}

double omega_seminorm(const std::vector<std::pair<TorusPoint, Vec2>>& samples,
                      const Modulus& m, double max_scale) {
    if (samples.size() < 2) throw DomainError("omega_seminorm: need at least 2 samples");
    if (max_scale <= 0.0) throw DomainError("omega_seminorm: max_scale <= 0");
    double best = 0.0;
    const size_t n = samples.size();
    for (size_t i = 0; i < n; ++i) {
        for (size_t j = i + 1; j < n; ++j) {
            double d = geodesic_distance(samples[i].first, samples[j].first);
            if (d <= 0.0 || d >= max_scale) continue;
            double df = (samples[i].second - samples[j].second).norm();
            if (df == 0.0) continue;
            best = std::max(best, df / m.eval(d));
        }
    }
    return best;
}

} // namespace osf
