#include "osf/field.hpp"

#include <algorithm>
#include <cmath>

namespace osf {

namespace {

double mod1(double t) {
    double r = t - std::floor(t);
    return r;
}

} // namespace

// ---------------------------------------------------------------------------
// OrbitPath
// ---------------------------------------------------------------------------

Vec2 OrbitPath::at_unwrapped(double time) const {
    if (t.empty()) throw ValidationError("empty orbit path");
    double tm = time;
    if (tm < 0.0 || tm > period) {
        tm = std::fmod(tm, period);
        if (tm < 0) tm += period;
    }
    size_t lo = 0, hi = t.size() - 1;
    while (lo + 1 < hi) {
        size_t mid = (lo + hi) / 2;
        if (t[mid] <= tm) lo = mid; else hi = mid;
    }
    double h = t[hi] - t[lo];
    if (h <= 0) return x[lo];
    double u = (tm - t[lo]) / h;
    double u2 = u * u, u3 = u2 * u;
    double h00 = 2 * u3 - 3 * u2 + 1, h10 = u3 - 2 * u2 + u;
    double h01 = -2 * u3 + 3 * u2, h11 = u3 - u2;
    return {h00 * x[lo].x + h10 * h * v[lo].x + h01 * x[hi].x + h11 * h * v[hi].x,
            h00 * x[lo].y + h10 * h * v[lo].y + h01 * x[hi].y + h11 * h * v[hi].y};
}

TorusPoint OrbitPath::at(double time) const {
    Vec2 u = at_unwrapped(time);
    return wrap(u.x, u.y);
}

// ---------------------------------------------------------------------------
// FieldSpec
// ---------------------------------------------------------------------------

Vec2 FieldSpec::eval(double t, TorusPoint p) const {
    double tm = mod1(t);
    Vec2 acc{};
    for (const BlockPtr& b : blocks_) acc = acc + b->eval(tm, p);
    return acc;
}

std::vector<double> FieldSpec::seams() const {
    std::vector<double> s;
    for (const BlockPtr& b : blocks_) b->seams(s);
    s.push_back(0.0);
    for (double& v : s) v = mod1(v);
    std::sort(s.begin(), s.end());
    s.erase(std::unique(s.begin(), s.end(),
                        [](double a, double b) { return std::fabs(a - b) < 1e-12; }),
            s.end());
    return s;
}

bool FieldSpec::zero_outside_static_supports() const {
    for (const BlockPtr& b : blocks_)
        if (!b->support().has_value()) return false;
    return true;
}

bool FieldSpec::outside_all_supports(TorusPoint p, double margin) const {
    for (const BlockPtr& b : blocks_) {
        auto s = b->support();
        if (!s) return false;
        if (geodesic_distance(p, s->first) <= s->second + margin) return false;
    }
    return true;
}

double FieldSpec::max_speed() const {
    double m = 0;
    for (const BlockPtr& b : blocks_) m += b->max_speed();
    return m;
}

FieldSpec FieldSpec::plus(const FieldSpec& other) const {
    std::vector<BlockPtr> all = blocks_;
    all.insert(all.end(), other.blocks_.begin(), other.blocks_.end());
    return FieldSpec(std::move(all));
}

// ---------------------------------------------------------------------------
// blocks
// ---------------------------------------------------------------------------

Vec2 HorseshoeStageBlock::eval(double t, TorusPoint p) const {
    const HorseshoeTuning& tu = design->tuning;
    double w1 = stage_bump(t, tu.t1_lo, tu.t1_hi);
    double w2 = stage_bump(t, tu.t2_lo, tu.t2_hi);
    if (w1 == 0.0 && w2 == 0.0) return {};
    // representative of p nearest the origin (the construction zone)
    Vec2 q = wrap_delta(TorusPoint{0, 0}, p);
    Vec2 acc{};
    if (w1 != 0.0) acc = acc + design->loop1.stream_field(q) * w1;
    if (w2 != 0.0) acc = acc + design->loop2.stream_field(q) * w2;
    return acc;
}

void HorseshoeStageBlock::seams(std::vector<double>& out) const {
    const HorseshoeTuning& tu = design->tuning;
    out.push_back(tu.t1_lo);
    out.push_back(tu.t1_hi);
    out.push_back(tu.t2_lo);
    out.push_back(tu.t2_hi);
}

double HorseshoeStageBlock::max_speed() const {
    const HorseshoeTuning& tu = design->tuning;
    double omega_peak = 140.0 / 64.0 / (tu.t1_hi - tu.t1_lo);
    return omega_peak * std::max(design->loop1.max_speed_estimate(),
                                 design->loop2.max_speed_estimate());
}

double RotationBumpBlock::omega_profile(double t) const {
    double t0 = anchor - eta, t1 = anchor;
    double tm = t;
    if (tm < t0) tm += 1.0;
    if (tm <= t0 || tm >= t1) return 0.0;
    return angle * stage_bump(tm, t0, t1);
}

Vec2 RotationBumpBlock::eval(double t, TorusPoint p) const {
    double om = omega_profile(t);
    if (om == 0.0) return {};
    Vec2 d = wrap_delta(center, p);
    double r = d.norm();
    double chi = cutoff().value(r);
    if (chi == 0.0) return {};
    return d.perp() * (om * chi);
}

void RotationBumpBlock::seams(std::vector<double>& out) const {
    out.push_back(mod1(anchor - eta));
    out.push_back(mod1(anchor));
}

double RotationBumpBlock::max_speed() const {
    return std::fabs(angle) * (140.0 / 64.0 / eta) * 0.75 * rho;
}

Vec2 RescaledBlock::eval(double t, TorusPoint p) const {
    Vec2 d = wrap_delta(center, p);
    if (std::fabs(d.x) > eps || std::fabs(d.y) > eps) return {};
    return child->eval(t, TorusPoint{d.x / eps, d.y / eps}) * eps;
}

std::optional<std::pair<TorusPoint, double>> RescaledBlock::support() const {
    auto s = child->support();
    if (!s) return std::nullopt;
    Vec2 c = wrap_delta(TorusPoint{0, 0}, s->first) * eps;
    return std::make_pair(wrap(center.x + c.x, center.y + c.y), eps * s->second);
}

Vec2 TimeCompressedBlock::eval(double t, TorusPoint p) const {
    if (t >= gamma) return {};
    return child->eval(t / gamma, p) * (1.0 / gamma);
}

void TimeCompressedBlock::seams(std::vector<double>& out) const {
    std::vector<double> inner = child->seams();
    for (double s : inner) out.push_back(s * gamma);
    out.push_back(gamma);
}

Vec2 FrozenTubeBlock::eval(double t, TorusPoint p) const {
    for (int i = 0; i < period_n; ++i) {
        TorusPoint c = orbit->at(t + i);
        double d = geodesic_distance(p, c);
        if (d >= radius) continue;
        CutoffSpec chi{0.5 * radius, radius};
        double w = chi.value(d);
        Vec2 at_center = base->eval(t, c);
        Vec2 at_point = base->eval(t, p);
        return at_center * w + at_point * (1.0 - w);
    }
    return base->eval(t, p);
}

void FrozenTubeBlock::seams(std::vector<double>& out) const {
    for (double s : base->seams()) out.push_back(s);
}

Vec2 OrbitInsertedBlock::eval(double t, TorusPoint p) const {
    Vec2 u = carrier->eval(t, p);
    for (int i = 0; i < period_n; ++i) {
        TorusPoint c = orbit->at(t + i);
        Vec2 d = wrap_delta(c, p);
        if (std::fabs(d.x) > 0.3 * radius || std::fabs(d.y) > 0.3 * radius) continue;
        if (d.norm() >= 0.3 * radius) continue;
        double th = (t + i) / period_n;
        Vec2 hval = insert->eval(th, wrap(d.x, d.y)) * (1.0 / period_n);
        return u + hval;
    }
    return u;
}

void OrbitInsertedBlock::seams(std::vector<double>& out) const {
    for (double s : carrier->seams()) out.push_back(s);
    std::vector<double> hs = insert->seams();
    for (int i = 0; i < period_n; ++i)
        for (double s : hs) {
            double tt = s * period_n - i;
            if (tt >= 0.0 && tt < 1.0) out.push_back(tt);
        }
}

double OrbitInsertedBlock::max_speed() const {
    return carrier->max_speed() + insert->max_speed() / period_n;
}

// ---------------------------------------------------------------------------
// builders
// ---------------------------------------------------------------------------

FieldSpec build_horseshoe_field_raw(int symbols, double eps, const HorseshoeTuning& tuning) {
    if (!(eps > 0.0 && eps <= 1.0)) throw DomainError("horseshoe scale must be in (0,1]");
    auto stage = std::make_shared<HorseshoeStageBlock>();
    stage->design = std::make_shared<HorseshoeDesign>(design_horseshoe(symbols, tuning));
    if (eps == 1.0) return FieldSpec({stage});
    auto rs = std::make_shared<RescaledBlock>();
    rs->child = stage;
    rs->eps = eps;
    rs->center = TorusPoint{0, 0};
    return FieldSpec({rs});
}

FieldSpec build_rotation_bump(TorusPoint center, double rho, double eta,
                              double time_anchor, double angle) {
    if (!(rho > 0.0 && rho < 1.0)) throw DomainError("bump rho must be in (0,1)");
    if (!(eta > 0.0 && eta < 1.0)) throw DomainError("bump eta must be in (0,1)");
    auto b = std::make_shared<RotationBumpBlock>();
    b->center = center;
    b->rho = rho;
    b->eta = eta;
    b->anchor = time_anchor;
    b->angle = angle;
    return FieldSpec({b});
}

FieldSpec build_constant_field(Vec2 v) {
    auto b = std::make_shared<ConstantBlock>();
    b->value = v;
    return FieldSpec({b});
}

FieldSpec time_compress(const FieldSpec& b, double gamma) {
    if (!(gamma > 0.0 && gamma <= 1.0)) throw DomainError("gamma must be in (0,1]");
    if (gamma == 1.0) return b;
    auto blk = std::make_shared<TimeCompressedBlock>();
    blk->child = std::make_shared<FieldSpec>(b);
    blk->gamma = gamma;
    return FieldSpec({blk});
}

FieldSpec freeze_tube(const FieldSpec& b, std::shared_ptr<const OrbitPath> orbit,
                      int period_n, double r) {
    if (r <= 0.0) throw DomainError("tube radius must be positive");
    for (int i = 0; i < period_n; ++i)
        for (int j = i + 1; j < period_n; ++j)
            for (int k = 0; k <= 64; ++k) {
                double t = k / 64.0;
                double d = geodesic_distance(orbit->at(t + i), orbit->at(t + j));
                if (d < 2.0 * r)
                    throw TubesOverlap("tubes " + std::to_string(i) + "," + std::to_string(j) +
                                       " closer than 2r at t=" + std::to_string(t));
            }
    auto blk = std::make_shared<FrozenTubeBlock>();
    blk->base = std::make_shared<FieldSpec>(b);
    blk->orbit = std::move(orbit);
    blk->period_n = period_n;
    blk->radius = r;
    return FieldSpec({blk});
}

FieldSpec insert_horseshoe_along_orbit(const FieldSpec& u, const FieldSpec& h,
                                       std::shared_ptr<const OrbitPath> orbit,
                                       int period_n, double r) {
    for (const BlockPtr& blk : h.blocks()) {
        auto s = blk->support();
        if (!s) throw SupportTooLarge("insert block must have a static support");
        double reach = geodesic_distance(TorusPoint{0, 0}, s->first) + s->second;
        if (reach > 0.25 * r)
            throw SupportTooLarge("insert support " + std::to_string(reach) +
                                  " exceeds r/4 = " + std::to_string(0.25 * r));
    }
    auto blk = std::make_shared<OrbitInsertedBlock>();
    blk->carrier = std::make_shared<FieldSpec>(u);
    blk->insert = std::make_shared<FieldSpec>(h);
    blk->orbit = std::move(orbit);
    blk->period_n = period_n;
    blk->radius = r;
    return FieldSpec({blk});
}

// ---------------------------------------------------------------------------
// estimation
// ---------------------------------------------------------------------------

namespace {

std::vector<TorusPoint> norm_sample_points(const FieldSpec& b, const SamplingSpec& g) {
    std::vector<TorusPoint> pts;
    int n = std::max(4, g.space_samples);
    pts.reserve((size_t)n * n + 256);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
            pts.push_back({-1.0 + 2.0 * (i + 0.5) / n, -1.0 + 2.0 * (j + 0.5) / n});
    if (g.support_adapted) {
        for (const BlockPtr& blk : b.blocks()) {
            auto s = blk->support();
            if (!s) continue;
            int m = 24;
            for (int i = 0; i < m; ++i)
                for (int j = 0; j < m; ++j) {
                    double dx = s->second * (-1.0 + 2.0 * (i + 0.5) / m);
                    double dy = s->second * (-1.0 + 2.0 * (j + 0.5) / m);
                    pts.push_back(wrap(s->first.x + dx, s->first.y + dy));
                }
        }
    }
    return pts;
}

} // namespace

NormEstimate field_norm_estimate(const FieldSpec& b, const Modulus& m,
                                 const SamplingSpec& grid, NormMode mode) {
    NormEstimate est;
    est.grid = grid;
    est.mode = mode;
    std::vector<TorusPoint> pts = norm_sample_points(b, grid);
    int nt = std::max(2, grid.time_samples);
    double acc = 0, acc_sup = 0, acc_semi = 0;
    double peak = 0, peak_sup = 0, peak_semi = 0;
    std::vector<std::pair<TorusPoint, Vec2>> samples(pts.size());
    for (int k = 0; k < nt; ++k) {
        double t = (k + 0.5) / nt;
        double sup = 0;
        for (size_t i = 0; i < pts.size(); ++i) {
            Vec2 v = b.eval(t, pts[i]);
            samples[i] = {pts[i], v};
            sup = std::max(sup, v.norm());
        }
        double semi = omega_seminorm(samples, m, std::sqrt(2.0));
        acc += (sup + semi) / nt;
        acc_sup += sup / nt;
        acc_semi += semi / nt;
        if (sup + semi > peak) {
            peak = sup + semi;
            peak_sup = sup;
            peak_semi = semi;
        }
    }
    if (mode == NormMode::TimeIntegral) {
        est.value = acc;
        est.sup_part = acc_sup;
        est.seminorm_part = acc_semi;
    } else {
        est.value = peak;
        est.sup_part = peak_sup;
        est.seminorm_part = peak_semi;
    }
    return est;
}

OscillationProfile good_scale_bad_interval(const FieldSpec& b, const Modulus& m,
                                           double eps, int time_samples,
                                           int space_samples) {
    if (eps <= 0.0) throw DomainError("good_scale_bad_interval: eps <= 0");
    SamplingSpec g;
    g.space_samples = space_samples;
    g.support_adapted = true;
    std::vector<TorusPoint> pts = norm_sample_points(b, g);
    int nt = std::max(4, time_samples);

    const int ladder = 10; // scales r = 2^-1 .. 2^-10
    std::vector<double> norm_t(nt);
    std::vector<std::vector<double>> osc(nt, std::vector<double>(ladder, 0.0));
    std::vector<std::pair<TorusPoint, Vec2>> samples(pts.size());
    for (int k = 0; k < nt; ++k) {
        double t = (k + 0.5) / nt;
        double sup = 0;
        for (size_t i = 0; i < pts.size(); ++i) {
            Vec2 v = b.eval(t, pts[i]);
            samples[i] = {pts[i], v};
            sup = std::max(sup, v.norm());
        }
        for (size_t i = 0; i < samples.size(); ++i)
            for (size_t j = i + 1; j < samples.size(); ++j) {
                double d = geodesic_distance(samples[i].first, samples[j].first);
                if (d <= 0.0 || d >= 0.5) continue;
                double df = (samples[i].second - samples[j].second).norm();
                if (df == 0.0) continue;
                double ratio = df / m.eval(d);
                int kd = std::clamp((int)std::floor(-std::log2(d)), 1, ladder);
                for (int q = 1; q <= kd; ++q)
                    osc[k][q - 1] = std::max(osc[k][q - 1], ratio);
            }
        double semi = omega_seminorm(samples, m, std::sqrt(2.0));
        norm_t[k] = sup + semi;
    }

    for (int q = 0; q < ladder; ++q) {
        double r = std::pow(2.0, -(q + 1));
        double bad_mass = 0;
        std::vector<bool> good(nt);
        for (int k = 0; k < nt; ++k) {
            good[k] = osc[k][q] < eps;
            if (!good[k]) bad_mass += norm_t[k] / nt;
        }
        if (bad_mass < eps) {
            OscillationProfile prof;
            prof.scale_r = r;
            prof.epsilon = eps;
            prof.bad_mass = bad_mass;
            int k = 0;
            while (k < nt) {
                if (!good[k]) { ++k; continue; }
                int start = k;
                while (k < nt && good[k]) ++k;
                prof.good_times.push_back({(double)start / nt, (double)k / nt});
            }
            return prof;
        }
    }
    throw NoAdmissibleScale("no dyadic scale down to 2^-10 meets the oscillation budget");
}

double divergence_fd(const FieldSpec& b, double t, TorusPoint p, double h) {
    // fourth-order centered stencil
    auto fx = [&](double d) { return b.eval(t, wrap(p.x + d, p.y)).x; };
    auto fy = [&](double d) { return b.eval(t, wrap(p.x, p.y + d)).y; };
    double dx = (-fx(2 * h) + 8 * fx(h) - 8 * fx(-h) + fx(-2 * h)) / (12 * h);
    double dy = (-fy(2 * h) + 8 * fy(h) - 8 * fy(-h) + fy(-2 * h)) / (12 * h);
    return dx + dy;
}

} // namespace osf
