#include "osf/flow.hpp"

#include <algorithm>
#include <cmath>
#include <atomic>
#include <limits>
#include <random>
#include <thread>

namespace osf {

namespace {

// Dormand-Prince 5(4) coefficients
const double C2 = 1.0 / 5, C3 = 3.0 / 10, C4 = 4.0 / 5, C5 = 8.0 / 9;
const double A21 = 1.0 / 5;
const double A31 = 3.0 / 40, A32 = 9.0 / 40;
const double A41 = 44.0 / 45, A42 = -56.0 / 15, A43 = 32.0 / 9;
const double A51 = 19372.0 / 6561, A52 = -25360.0 / 2187, A53 = 64448.0 / 6561,
             A54 = -212.0 / 729;
const double A61 = 9017.0 / 3168, A62 = -355.0 / 33, A63 = 46732.0 / 5247,
             A64 = 49.0 / 176, A65 = -5103.0 / 18656;
const double B1 = 35.0 / 384, B3 = 500.0 / 1113, B4 = 125.0 / 192,
             B5 = -2187.0 / 6784, B6 = 11.0 / 84;
// embedded 4th order
const double E1 = 5179.0 / 57600, E3 = 7571.0 / 16695, E4 = 393.0 / 640,
             E5 = -92097.0 / 339200, E6 = 187.0 / 2100, E7 = 1.0 / 40;

struct Integrator {
    const FieldSpec& b;
    const IntegratorConfig& cfg;
    long steps = 0;
    double err_accum = 0;

    Vec2 f(double t, Vec2 y) const { return b.eval(t, wrap(y.x, y.y)); }

    // integrate over [t0, t1] within one smooth stage (no seams inside)
    Vec2 run_segment(Vec2 y, double t0, double t1) {
        double t = t0;
        double span = t1 - t0;
        if (span <= 0) return y;
        double h = std::min(cfg.max_step, span);
        Vec2 k1 = f(t, y);
        bool have_k1 = true;
        while (t < t1 - 1e-15) {
            h = std::min(h, t1 - t);
            if (h < 1e-14)
                throw StepUnderflow("integrator step collapsed at t=" + std::to_string(t));
            if (!have_k1) {
                k1 = f(t, y);
                have_k1 = true;
            }
            Vec2 k2 = f(t + C2 * h, y + k1 * (A21 * h));
            Vec2 k3 = f(t + C3 * h, y + (k1 * A31 + k2 * A32) * h);
            Vec2 k4 = f(t + C4 * h, y + (k1 * A41 + k2 * A42 + k3 * A43) * h);
            Vec2 k5 = f(t + C5 * h, y + (k1 * A51 + k2 * A52 + k3 * A53 + k4 * A54) * h);
            Vec2 k6 = f(t + h, y + (k1 * A61 + k2 * A62 + k3 * A63 + k4 * A64 + k5 * A65) * h);
            Vec2 y5 = y + (k1 * B1 + k3 * B3 + k4 * B4 + k5 * B5 + k6 * B6) * h;
            Vec2 k7 = f(t + h, y5);
            Vec2 y4 = y + (k1 * E1 + k3 * E3 + k4 * E4 + k5 * E5 + k6 * E6 + k7 * E7) * h;
            Vec2 diff = y5 - y4;
            double sc = cfg.abs_tol +
                        cfg.rel_tol * std::max({1.0, y.norm(), y5.norm()});
            double err = diff.norm() / sc;
            ++steps;
            if (err <= 1.0) {
                t += h;
                y = y5;
                k1 = k7; // FSAL
                err_accum += diff.norm();
                double grow = err > 1e-10 ? 0.9 * std::pow(err, -0.2) : 5.0;
                h = std::min(cfg.max_step, h * std::clamp(grow, 0.2, 5.0));
            } else {
                double shrink = 0.9 * std::pow(err, -0.2);
                h *= std::clamp(shrink, 0.1, 0.9);
                have_k1 = true; // k1 still valid at (t, y)
            }
        }
        return y;
    }
};

// segment boundaries: integer times and field seams within (t0, t1)
std::vector<double> segment_times(const FieldSpec& b, double t0, double t1, bool snap) {
    std::vector<double> cuts{t0, t1};
    if (snap) {
        std::vector<double> seams = b.seams();
        double base = std::floor(t0);
        for (double k = base; k < t1 + 1.0; k += 1.0) {
            for (double s : seams) {
                double c = k + s;
                if (c > t0 + 1e-13 && c < t1 - 1e-13) cuts.push_back(c);
            }
        }
    }
    std::sort(cuts.begin(), cuts.end());
    cuts.erase(std::unique(cuts.begin(), cuts.end(),
                           [](double a, double b) { return std::fabs(a - b) < 1e-13; }),
               cuts.end());
    return cuts;
}

} // namespace

FlowResult integrate(const FieldSpec& b, TorusPoint x0, double t0, double t1,
                     const IntegratorConfig& cfg) {
    if (t1 < t0) throw DomainError("integrate: t1 < t0");
    FlowResult out;
    if (t1 == t0 || b.empty()) {
        out.x = x0;
        return out;
    }
    // support locality: a point outside every static support never moves
    if (b.zero_outside_static_supports() && b.outside_all_supports(x0)) {
        out.x = x0;
        return out;
    }
    Integrator integ{b, cfg};
    Vec2 y = as_vec(x0);
    std::vector<double> cuts = segment_times(b, t0, t1, cfg.boundary_snap);
    for (size_t i = 0; i + 1 < cuts.size(); ++i) {
        // re-check locality per segment (supports are static)
        if (b.zero_outside_static_supports() &&
            b.outside_all_supports(wrap(y.x, y.y))) {
            continue;
        }
        y = integ.run_segment(y, cuts[i], cuts[i + 1]);
    }
    out.x = wrap(y.x, y.y);
    out.error_estimate = integ.err_accum;
    out.steps = integ.steps;
    return out;
}

std::shared_ptr<OrbitPath> compute_orbit(const FieldSpec& b, TorusPoint x0,
                                         double horizon, const IntegratorConfig& cfg) {
    auto path = std::make_shared<OrbitPath>();
    path->period = horizon;
    path->start = x0;
    IntegratorConfig c = cfg;
    c.max_step = std::min(cfg.max_step, 0.01);
    Integrator integ{b, c};
    Vec2 y = as_vec(x0);
    std::vector<double> cuts = segment_times(b, 0.0, horizon, true);
    // record on a fixed fine grid inside each segment
    path->t.push_back(0.0);
    path->x.push_back(y);
    path->v.push_back(b.eval(0.0, x0));
    for (size_t i = 0; i + 1 < cuts.size(); ++i) {
        double a = cuts[i], z = cuts[i + 1];
        int n = std::max(2, (int)std::ceil((z - a) / 0.005));
        for (int k = 1; k <= n; ++k) {
            double tt = a + (z - a) * k / n;
            y = integ.run_segment(y, a + (z - a) * (k - 1) / n, tt);
            path->t.push_back(tt);
            path->x.push_back(y);
            path->v.push_back(b.eval(tt, wrap(y.x, y.y)));
        }
    }
    return path;
}

void parallel_for(int n, int threads, const std::function<void(int)>& fn) {
    int hw = threads > 0 ? threads : (int)std::thread::hardware_concurrency();
    hw = std::max(1, std::min(hw, 16));
    if (hw == 1 || n < 4) {
        for (int i = 0; i < n; ++i) fn(i);
        return;
    }
    std::vector<std::thread> pool;
    std::atomic<int> next{0};
    for (int w = 0; w < hw; ++w)
        pool.emplace_back([&]() {
            for (;;) {
                int i = next.fetch_add(1);
                if (i >= n) return;
                fn(i);
            }
        });
    for (auto& th : pool) th.join();
}

MapGrid time_one_map(const FieldSpec& b, int resolution, const IntegratorConfig& cfg,
                     double horizon) {
    if (resolution < 2) throw DomainError("time_one_map: resolution must be >= 2");
    MapGrid g;
    g.resolution = resolution;
    g.horizon = horizon;
    g.inputs.resize((size_t)resolution * resolution);
    g.images.resize((size_t)resolution * resolution);
    for (int i = 0; i < resolution; ++i)
        for (int j = 0; j < resolution; ++j)
            g.inputs[(size_t)i * resolution + j] =
                TorusPoint{-1.0 + 2.0 * i / resolution, -1.0 + 2.0 * j / resolution};
    parallel_for(resolution, cfg.threads, [&](int i) {
        for (int j = 0; j < resolution; ++j) {
            size_t idx = (size_t)i * resolution + j;
            g.images[idx] = integrate(b, g.inputs[idx], 0.0, horizon, cfg).x;
        }
    });
    return g;
}

MapOracle make_time_map(const FieldSpec& b, double horizon, const IntegratorConfig& cfg) {
    FieldSpec copy = b;
    IntegratorConfig c = cfg;
    return [copy, horizon, c](TorusPoint p) {
        return integrate(copy, p, 0.0, horizon, c).x;
    };
}

PeriodicOrbitResult find_near_periodic_point(const FieldSpec& b, double rho0,
                                             int seed_grid, int m_max,
                                             const IntegratorConfig& cfg) {
    if (rho0 <= 0.0) throw DomainError("rho0 must be positive");
    if (m_max < 1) throw DomainError("m_max must be >= 1");
    for (int si = 0; si < seed_grid; ++si) {
        for (int sj = 0; sj < seed_grid; ++sj) {
            TorusPoint seed{-1.0 + 2.0 * si / seed_grid, -1.0 + 2.0 * sj / seed_grid};
            std::vector<TorusPoint> orbit{seed};
            orbit.reserve(m_max + 1);
            bool found = false;
            for (int n = 1; n <= m_max && !found; ++n) {
                orbit.push_back(integrate(b, orbit.back(), 0.0, 1.0, cfg).x);
                if (geodesic_distance(orbit.front(), orbit.back()) < rho0) found = true;
                // any early recurrence along the orbit qualifies as well
                for (int i = 1; i < n && !found; ++i)
                    if (geodesic_distance(orbit[i], orbit.back()) < rho0) found = true;
            }
            if (!found) continue;
            int M = (int)orbit.size() - 1;
            // argmin over pairs, tie-break smallest j then smallest i
            int bi = 0, bj = 1;
            double best = 1e99;
            for (int j = 1; j <= M; ++j)
                for (int i = 0; i < j; ++i) {
                    double d = geodesic_distance(orbit[i], orbit[j]);
                    if (d < best - 1e-15) {
                        best = d;
                        bi = i;
                        bj = j;
                    }
                }
            PeriodicOrbitResult res;
            res.seed = seed;
            res.x = orbit[bi];
            res.period = bj - bi;
            res.closure_gap = best;
            double minsep = 1e99;
            for (int n = bi + 1; n < bj; ++n) {
                minsep = std::min(minsep, geodesic_distance(orbit[n], orbit[bi]));
                minsep = std::min(minsep, geodesic_distance(orbit[n], orbit[bj]));
            }
            res.min_separation = (bj - bi) > 1 ? minsep : 0.0;
            return res;
        }
    }
    throw RecurrenceNotFound("no seed orbit recurred within rho0 = " + std::to_string(rho0) +
                             " by M = " + std::to_string(m_max));
}

DeviationReport deviation_check(const FieldSpec& v, const FieldSpec& w, const Modulus& m,
                                int samples, double horizon, const IntegratorConfig& cfg,
                                double budget_vw_override, double budget_v_override,
                                unsigned seed) {
    DeviationReport rep;
    double norm_v = budget_v_override;
    double norm_vw = budget_vw_override;
    if (norm_v < 0) norm_v = field_norm_estimate(v, m).value;
    if (norm_vw < 0) {
        // ||w - v|| via the blockwise difference of the two specs
        FieldSpec diff;
        std::vector<BlockPtr> blocks = w.blocks();
        // assume w = v + extra blocks sharing the prefix
        size_t shared = 0;
        while (shared < v.blocks().size() && shared < blocks.size() &&
               v.blocks()[shared] == blocks[shared])
            ++shared;
        if (shared == v.blocks().size()) {
            std::vector<BlockPtr> extra(blocks.begin() + shared, blocks.end());
            norm_vw = field_norm_estimate(FieldSpec(extra), m).value;
        } else {
            norm_vw = std::fabs(field_norm_estimate(w, m).value - norm_v);
        }
    }
    rep.budget_v = norm_v;
    rep.budget_vw = norm_vw;

    std::mt19937 rng(seed);
    std::uniform_real_distribution<double> U(-1.0, 1.0);
    const double gap_floor = 1e-12;
    std::vector<TorusPoint> pts(samples);
    for (int i = 0; i < samples; ++i) pts[i] = {U(rng), U(rng)};
    std::vector<double> ratios(samples, 0.0), devs(samples, 0.0);
    parallel_for(samples, cfg.threads, [&](int i) {
        TorusPoint a = pts[i], bv = pts[i];
        double worst_ratio = 0, worst_dev = 0;
        int legs = std::max(1, (int)std::llround(horizon));
        double tprev = 0;
        for (int leg = 1; leg <= legs; ++leg) {
            double tt = horizon * leg / legs;
            a = integrate(v, a, tprev, tt, cfg).x;
            bv = integrate(w, bv, tprev, tt, cfg).x;
            tprev = tt;
            double dev = geodesic_distance(a, bv);
            double bound = m.bihari_bound(gap_floor + norm_vw * tt, norm_v * tt);
            worst_dev = std::max(worst_dev, dev);
            if (bound > 0) worst_ratio = std::max(worst_ratio, dev / bound);
        }
        ratios[i] = worst_ratio;
        devs[i] = worst_dev;
    });
    for (int i = 0; i < samples; ++i) {
        rep.max_ratio = std::max(rep.max_ratio, ratios[i]);
        rep.max_deviation = std::max(rep.max_deviation, devs[i]);
        if (ratios[i] > 1.0) ++rep.violations;
    }
    rep.samples = samples;
    return rep;
}

ExpGradientResult exp_gradient_diagnostic(const FieldSpec& b, double beta, int grid,
                                          int time_samples) {
    if (beta <= 0.0) throw DomainError("beta must be positive");
    ExpGradientResult out;
    double h = 1e-5;
    for (int k = 0; k < time_samples; ++k) {
        double t = (k + 0.5) / time_samples;
        double acc = 0;
        double cell = 4.0 / ((double)grid * grid);
        for (int i = 0; i < grid; ++i)
            for (int j = 0; j < grid; ++j) {
                TorusPoint p{-1.0 + 2.0 * (i + 0.5) / grid, -1.0 + 2.0 * (j + 0.5) / grid};
                Vec2 fx = (b.eval(t, wrap(p.x + h, p.y)) - b.eval(t, wrap(p.x - h, p.y))) *
                          (0.5 / h);
                Vec2 fy = (b.eval(t, wrap(p.x, p.y + h)) - b.eval(t, wrap(p.x, p.y - h))) *
                          (0.5 / h);
                double gnorm = std::sqrt(fx.x * fx.x + fx.y * fx.y + fy.x * fy.x +
                                         fy.y * fy.y);
                double e = beta * gnorm;
                if (e > 700.0) {
                    out.overflow = true;
                    out.value = std::numeric_limits<double>::infinity();
                    return out;
                }
                acc += std::exp(e) * cell;
            }
        out.value = std::max(out.value, acc);
    }
    return out;
}

} // namespace osf
