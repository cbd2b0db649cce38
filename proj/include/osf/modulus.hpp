#ifndef OSF_MODULUS_HPP
#define OSF_MODULUS_HPP

#include <cmath>
#include <functional>
#include <string>
#include <utility>
#include <vector>
#include "osf/errors.hpp"
#include "osf/torus.hpp"

namespace osf {

enum class ModulusKind { LogLipschitz, PowerLog, Holder, Linear };

std::string kind_name(ModulusKind k);
ModulusKind kind_from_name(const std::string& s);

// Modulus of continuity with a closed-form core on (0, crossover] and an affine
// extension above the crossover matching value and slope (keeps the modulus
// increasing, concave and C^1 on all of (0, sqrt(2)]).
//
//   log_lipschitz : w(s) = -s log s
//   power_log(g)  : w(s) = s (-log s)^g,  0 < g <= 1
//   holder(a)     : w(s) = s^a,           0 < a < 1   (no crossover needed)
//   linear        : w(s) = s
class Modulus {
public:
    static Modulus log_lipschitz(double crossover = std::exp(-2.0));
    static Modulus power_log(double exponent, double crossover = std::exp(-2.0));
    static Modulus holder(double alpha);
    static Modulus linear();

    ModulusKind kind() const { return kind_; }
    double crossover() const { return crossover_; }
    double param() const { return param_; }

    double eval(double s) const;        // w(s), s >= 0
    double derivative(double s) const;  // w'(s), s > 0

    // Osgood integral G(s) = int_1^s 1/w ; strictly increasing, G(1)=0.
    // Closed forms piecewise; DomainError for s <= 0.
    double osgood_G(double s) const;

    // G^{-1}(G(a) + budget), capped at the torus diameter sqrt(2).
    // DomainError on a <= 0 or budget < 0.
    double bihari_bound(double initial_gap, double budget) const;

    bool osgood_non_lipschitz_kind() const;

private:
    Modulus(ModulusKind k, double crossover, double param);
    double core(double s) const;       // closed-form region value
    double core_deriv(double s) const;
    // antiderivative of 1/w on the core region (valid 0 < s <= crossover)
    double core_G_anti(double s) const;

    ModulusKind kind_;
    double crossover_; // affine extension above this scale
    double param_;     // exponent (power_log) or alpha (holder); unused otherwise
    double ext_value_; // w(crossover)
    double ext_slope_; // w'(crossover)
};

enum class DivergenceVerdict { Yes, No, Inconclusive };

struct OsgoodReport {
    bool is_increasing = false;
    bool is_concave = false;
    DivergenceVerdict integral_diverges = DivergenceVerdict::Inconclusive;
    bool non_lipschitz = false;
    std::vector<double> partial_sums;   // int_{2^-k}^1 1/w, k = 1..depth
    std::vector<double> ratio_sequence; // s/w(s) on the dyadic grid
};

// Diagnostic record of the Osgood hypotheses evaluated on a dyadic ladder.
// Throws NonMonotone if the sampled increasing check fails. Requires depth >= 4.
OsgoodReport check_osgood(const Modulus& m, int depth);

// Restricted seminorm max over sampled pairs with 0 < d < max_scale of |df|/w(d).
// A lower bound of the true seminorm; requires >= 2 samples and max_scale > 0.
double omega_seminorm(const std::vector<std::pair<TorusPoint, Vec2>>& samples,
                      const Modulus& m, double max_scale);

struct TimeInterval { double lo = 0, hi = 0; };

struct OscillationProfile {
    std::vector<TimeInterval> good_times; // I as a union of intervals in [0,1]
    double scale_r = 0;
    double epsilon = 0;
    double bad_mass = 0; // time integral of ||b(t,.)||_w over the complement of I
};

// adaptive Simpson quadrature, relative tolerance driven
double adaptive_quad(const std::function<double(double)>& f, double a, double b,
                     double rel_tol = 1e-10, int max_depth = 48);

} // namespace osf

#endif
