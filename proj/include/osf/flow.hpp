#ifndef OSF_FLOW_HPP
#define OSF_FLOW_HPP

#include <functional>
#include <memory>
#include <vector>

#include "osf/field.hpp"
#include "osf/modulus.hpp"
#include "osf/torus.hpp"

namespace osf {

struct IntegratorConfig {
    double rel_tol = 1e-9;
    double abs_tol = 1e-11;
    double max_step = 0.05;
    bool boundary_snap = true; // split steps at block time-window seams
    int threads = 0;           // 0 = hardware concurrency
};

struct FlowResult {
    TorusPoint x{};
    double error_estimate = 0; // accumulated embedded-pair error
    long steps = 0;
};

// flow map X_{t0 -> t1} of the 1-periodic field
FlowResult integrate(const FieldSpec& b, TorusPoint x0, double t0, double t1,
                     const IntegratorConfig& cfg = {});

inline TorusPoint flow_to(const FieldSpec& b, TorusPoint x0, double t,
                          const IntegratorConfig& cfg = {}) {
    return integrate(b, x0, 0.0, t, cfg).x;
}

// dense orbit over [0, horizon] for tube constructions
std::shared_ptr<OrbitPath> compute_orbit(const FieldSpec& b, TorusPoint x0,
                                         double horizon,
                                         const IntegratorConfig& cfg = {});

struct MapGrid {
    int resolution = 0;
    double horizon = 1.0;
    std::vector<TorusPoint> inputs;
    std::vector<TorusPoint> images;
    TorusPoint input(int i, int j) const { return inputs[(size_t)i * resolution + j]; }
    TorusPoint image(int i, int j) const { return images[(size_t)i * resolution + j]; }
};

MapGrid time_one_map(const FieldSpec& b, int resolution,
                     const IntegratorConfig& cfg = {}, double horizon = 1.0);

// reusable map oracle: X_horizon of b (composition handled by the integrator)
using MapOracle = std::function<TorusPoint(TorusPoint)>;
MapOracle make_time_map(const FieldSpec& b, double horizon,
                        const IntegratorConfig& cfg = {});

struct PeriodicOrbitResult {
    TorusPoint x{};
    int period = 0;        // N
    double closure_gap = 0; // rho = d(x, X_N(x))
    double min_separation = 0;
    TorusPoint seed{};
};

// scans seed orbits for a near-return; on the first orbit with a gap below
// rho0 takes the argmin pair over 0 <= i < j <= M
PeriodicOrbitResult find_near_periodic_point(const FieldSpec& b, double rho0,
                                             int seed_grid = 32, int m_max = 64,
                                             const IntegratorConfig& cfg = {});

struct DeviationReport {
    double max_ratio = 0;    // measured deviation / bihari bound
    double max_deviation = 0;
    int violations = 0;      // samples with ratio > 1
    int samples = 0;
    double budget_vw = 0;    // estimated per-period ||w - v||
    double budget_v = 0;     // estimated per-period ||v||
};

DeviationReport deviation_check(const FieldSpec& v, const FieldSpec& w,
                                const Modulus& m, int samples, double horizon,
                                const IntegratorConfig& cfg = {},
                                double budget_vw_override = -1.0,
                                double budget_v_override = -1.0,
                                unsigned seed = 12345);

struct ExpGradientResult {
    double value = 0;   // sup over time of the integral
    bool overflow = false;
};

ExpGradientResult exp_gradient_diagnostic(const FieldSpec& b, double beta,
                                          int grid = 128, int time_samples = 16);

// parallel map over an index range with deterministic ordering
void parallel_for(int n, int threads, const std::function<void(int)>& fn);

} // namespace osf

#endif
