#include "osf/channel.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstring>
#include <cstdlib>
#include <limits>
#include <string>

namespace osf {

// ---------------------------------------------------------------------------
// smoothstep
// ---------------------------------------------------------------------------

double smoothstep5(double t) {
    if (t <= 0.0) return 0.0;
    if (t >= 1.0) return 1.0;
    return t * t * t * (10.0 + t * (-15.0 + 6.0 * t));
}

double smoothstep5_deriv(double t) {
    if (t <= 0.0 || t >= 1.0) return 0.0;
    return 30.0 * t * t * (1.0 + t * (-2.0 + t));
}

double smoothstep5_integral(double t) {
    if (t <= 0.0) return 0.0;
    if (t >= 1.0) return 0.5 + (t - 1.0);
    double t4 = t * t * t * t;
    return t4 * (2.5 + t * (-3.0 + t));
}

// ---------------------------------------------------------------------------
// Profile
// ---------------------------------------------------------------------------

void Profile::append_const(double len, double v) {
    if (len <= 0.0) return;
    cum_.push_back(total_integral());
    segs_.push_back({end_, end_ + len, v, v});
    end_ += len;
}

void Profile::append_blend(double len, double v_from, double v_to) {
    if (len <= 0.0) return;
    cum_.push_back(total_integral());
    segs_.push_back({end_, end_ + len, v_from, v_to});
    end_ += len;
}

const Profile::Seg& Profile::locate(double s) const {
    size_t lo = 0, hi = segs_.size() - 1;
    while (lo < hi) {
        size_t mid = (lo + hi) / 2;
        if (segs_[mid].s1 < s) lo = mid + 1; else hi = mid;
    }
    return segs_[lo];
}

double Profile::value(double s) const {
    if (segs_.empty()) return 0.0;
    if (s <= 0.0) return segs_.front().v0;
    if (s >= end_) return segs_.back().v1;
    const Seg& g = locate(s);
    if (g.v0 == g.v1) return g.v0;
    return g.v0 + (g.v1 - g.v0) * smoothstep5((s - g.s0) / (g.s1 - g.s0));
}

double Profile::deriv(double s) const {
    if (segs_.empty() || s <= 0.0 || s >= end_) return 0.0;
    const Seg& g = locate(s);
    if (g.v0 == g.v1) return 0.0;
    double L = g.s1 - g.s0;
    return (g.v1 - g.v0) * smoothstep5_deriv((s - g.s0) / L) / L;
}

double Profile::integral(double s) const {
    if (segs_.empty() || s <= 0.0) return 0.0;
    if (s >= end_) return total_integral();
    size_t lo = 0, hi = segs_.size() - 1;
    while (lo < hi) {
        size_t mid = (lo + hi) / 2;
        if (segs_[mid].s1 < s) lo = mid + 1; else hi = mid;
    }
    const Seg& g = segs_[lo];
    double L = g.s1 - g.s0;
    double t = (s - g.s0) / L;
    return cum_[lo] + g.v0 * (s - g.s0) + (g.v1 - g.v0) * L * smoothstep5_integral(t);
}

double Profile::total_integral() const {
    if (segs_.empty()) return 0.0;
    const Seg& g = segs_.back();
    double L = g.s1 - g.s0;
    return cum_.back() + g.v0 * L + (g.v1 - g.v0) * L * 0.5;
}

bool Profile::constant_on(double s0, double s1) const {
    for (const Seg& g : segs_) {
        if (g.v0 == g.v1) continue;
        if (g.s1 > s0 && g.s0 < s1) return false;
    }
    return true;
}

// ---------------------------------------------------------------------------
// pose advancement over moves
// ---------------------------------------------------------------------------

namespace {

struct KappaSpan {
    double kappa0 = 0, len = 0, ramp = 0; // symmetric ramps
    double theta_from(double theta0, double s) const {
        s = std::clamp(s, 0.0, len);
        double th = 0.0;
        if (ramp > 0) {
            double a = std::min(s, ramp);
            th += kappa0 * ramp * smoothstep5_integral(a / ramp);
        }
        if (s > ramp) th += kappa0 * (std::min(s, len - ramp) - ramp);
        if (s > len - ramp && ramp > 0) {
            double u0 = (len - s) / ramp;
            th += kappa0 * ramp * (0.5 - smoothstep5_integral(u0));
        }
        return theta0 + th;
    }
};

KappaSpan turn_span(double dtheta, double radius, double ramp_frac,
                    double ramp_override = 0.0) {
    if (radius <= 0.0) throw ValidationError("turn radius must be positive");
    KappaSpan sp;
    double ad = std::fabs(dtheta);
    if (ad < 1e-14) return sp;
    sp.kappa0 = (dtheta > 0 ? 1.0 : -1.0) / radius;
    double base = ramp_override > 0.0 ? ramp_override : ramp_frac * radius;
    sp.ramp = std::min(base, 0.45 * ad * radius);
    sp.len = ad * radius + sp.ramp; // integral kappa = kappa0 (len - ramp) = dtheta
    return sp;
}

Pose advance_span(const Pose& from, const KappaSpan& sp) {
    if (sp.len <= 0.0) return from;
    int n = std::max(64, (int)(sp.len / 2.5e-4));
    n += n % 2;
    double h = sp.len / n;
    double sx = 0, sy = 0;
    for (int i = 0; i <= n; ++i) {
        double th = sp.theta_from(from.theta, i * h);
        double wgt = (i == 0 || i == n) ? 1.0 : (i % 2 ? 4.0 : 2.0);
        sx += wgt * std::cos(th);
        sy += wgt * std::sin(th);
    }
    Pose out;
    out.p = from.p + Vec2{sx * h / 3.0, sy * h / 3.0};
    out.theta = sp.theta_from(from.theta, sp.len);
    return out;
}

Pose advance_move(const Pose& from, const ChannelMove& m, double ramp_frac) {
    switch (m.type) {
        case ChannelMove::Type::Straight:
        case ChannelMove::Type::Taper: {
            Pose out = from;
            out.p = from.p + from.tangent() * m.a;
            return out;
        }
        case ChannelMove::Type::Turn:
        case ChannelMove::Type::TurnTaper:
            return advance_span(from, turn_span(m.a, m.b, ramp_frac, m.ramp));
    }
    return from;
}

double move_length(const ChannelMove& m, double ramp_frac) {
    if (m.type == ChannelMove::Type::Turn || m.type == ChannelMove::Type::TurnTaper)
        return turn_span(m.a, m.b, ramp_frac, m.ramp).len;
    return m.a;
}

double wrap_angle(double a) {
    while (a > M_PI) a -= 2.0 * M_PI;
    while (a <= -M_PI) a += 2.0 * M_PI;
    return a;
}

} // namespace

// ---------------------------------------------------------------------------
// builder
// ---------------------------------------------------------------------------

ChannelBuilder::ChannelBuilder(Pose start, double width, double rf)
    : start_pose(start), start_width(width), ramp_frac(rf),
      cur_(start), width_(width), arclen_(0.0) {}

void ChannelBuilder::apply_move(const ChannelMove& m) {
    moves.push_back(m);
    cur_ = advance_move(cur_, m, ramp_frac);
    arclen_ += move_length(m, ramp_frac);
    if (m.type == ChannelMove::Type::Taper) width_ = m.b;
    if (m.type == ChannelMove::Type::TurnTaper) width_ = m.c;
}

void ChannelBuilder::straight(double len) {
    if (len <= 1e-13) return;
    apply_move({ChannelMove::Type::Straight, len, 0.0});
}

void ChannelBuilder::taper(double len, double new_width) {
    if (len <= 1e-13) throw ValidationError("taper length must be positive");
    apply_move({ChannelMove::Type::Taper, len, new_width});
}

void ChannelBuilder::turn(double dtheta, double radius, double ramp_override) {
    if (std::fabs(dtheta) < 1e-13) return;
    apply_move({ChannelMove::Type::Turn, dtheta, radius, 0.0, ramp_override});
}

void ChannelBuilder::turn_taper(double dtheta, double radius, double new_width,
                                double ramp_override) {
    if (std::fabs(dtheta) < 1e-13) throw ValidationError("turn_taper needs a real turn");
    apply_move({ChannelMove::Type::TurnTaper, dtheta, radius, new_width, ramp_override});
}

void ChannelBuilder::connect_to(Pose target, double R) {
    struct Cand { double d1, L, d2; };
    std::vector<Cand> seeds;
    Vec2 n0 = cur_.tangent().perp(), n1 = target.tangent().perp();
    auto add_seed = [&](int s0, int s1) {
        Vec2 c0 = cur_.p + n0 * (R * s0);
        Vec2 c1 = target.p + n1 * (R * s1);
        Vec2 d = c1 - c0;
        double dist = d.norm();
        if (dist < 1e-9) return;
        double base = std::atan2(d.y, d.x);
        double dir = base;
        if (s0 != s1) {
            double c = 2.0 * R / dist;
            if (c > 1.0) return;
            dir = base + s0 * (M_PI / 2.0 - std::acos(c));
        }
        double d1 = wrap_angle(dir - cur_.theta);
        if (s0 > 0 && d1 < -1e-12) d1 += 2.0 * M_PI;
        if (s0 < 0 && d1 > 1e-12) d1 -= 2.0 * M_PI;
        double d2 = wrap_angle(target.theta - dir);
        if (s1 > 0 && d2 < -1e-12) d2 += 2.0 * M_PI;
        if (s1 < 0 && d2 > 1e-12) d2 -= 2.0 * M_PI;
        seeds.push_back({d1, dist, d2});
    };
    add_seed(+1, +1);
    add_seed(-1, -1);
    add_seed(+1, -1);
    add_seed(-1, +1);
    {
        double dth = wrap_angle(target.theta - cur_.theta);
        seeds.push_back({0.5 * dth, (target.p - cur_.p).norm(), 0.5 * dth});
    }

    auto endpose = [&](const Cand& c) {
        Pose p = cur_;
        if (std::fabs(c.d1) > 1e-13) p = advance_span(p, turn_span(c.d1, R, ramp_frac));
        p.p = p.p + p.tangent() * std::max(c.L, 0.0);
        if (std::fabs(c.d2) > 1e-13) p = advance_span(p, turn_span(c.d2, R, ramp_frac));
        return p;
    };
    auto residual = [&](const Cand& c, double r[3]) {
        Pose e = endpose(c);
        r[0] = e.p.x - target.p.x;
        r[1] = e.p.y - target.p.y;
        r[2] = wrap_angle(e.theta - target.theta);
        return std::fabs(r[0]) + std::fabs(r[1]) + std::fabs(r[2]);
    };

    Cand best{};
    bool ok = false;
    for (Cand c : seeds) {
        bool conv = false;
        double r[3];
        for (int it = 0; it < 80; ++it) {
            double rn = residual(c, r);
            if (rn < 1e-11) { conv = true; break; }
            double J[3][3], rp[3];
            const double hh = 1e-7;
            Cand cp = c; cp.d1 += hh; residual(cp, rp);
            for (int k = 0; k < 3; ++k) J[k][0] = (rp[k] - r[k]) / hh;
            cp = c; cp.L += hh; residual(cp, rp);
            for (int k = 0; k < 3; ++k) J[k][1] = (rp[k] - r[k]) / hh;
            cp = c; cp.d2 += hh; residual(cp, rp);
            for (int k = 0; k < 3; ++k) J[k][2] = (rp[k] - r[k]) / hh;
            double det = J[0][0]*(J[1][1]*J[2][2]-J[1][2]*J[2][1])
                       - J[0][1]*(J[1][0]*J[2][2]-J[1][2]*J[2][0])
                       + J[0][2]*(J[1][0]*J[2][1]-J[1][1]*J[2][0]);
            if (std::fabs(det) < 1e-16) break;
            double M[3][3];
            auto cramer = [&](int col) {
                std::memcpy(M, J, sizeof(M));
                for (int k = 0; k < 3; ++k) M[k][col] = -r[k];
                return (M[0][0]*(M[1][1]*M[2][2]-M[1][2]*M[2][1])
                      - M[0][1]*(M[1][0]*M[2][2]-M[1][2]*M[2][0])
                      + M[0][2]*(M[1][0]*M[2][1]-M[1][1]*M[2][0])) / det;
            };
            double dd1 = cramer(0), dL = cramer(1), dd2 = cramer(2);
            double step = std::max({std::fabs(dd1), std::fabs(dL), std::fabs(dd2)});
            double damp = step > 0.5 ? 0.5 / step : 1.0;
            c.d1 += damp * dd1;
            c.L += damp * dL;
            c.d2 += damp * dd2;
            if (c.L < 1e-4) c.L = 1e-4;
        }
        if (!conv) continue;
        if (std::fabs(c.d1) > 2.2 * M_PI || std::fabs(c.d2) > 2.2 * M_PI) continue;
        if (c.L < 2e-4 || c.L > 4.0) continue;
        double cost = std::fabs(c.d1) + std::fabs(c.d2);
        if (!ok || cost < std::fabs(best.d1) + std::fabs(best.d2)) {
            best = c;
            ok = true;
        }
    }
    if (!ok)
        throw ValidationError("connect_to: no smooth connector found");
    if (std::fabs(best.d1) > 1e-12) turn(best.d1, R);
    straight(best.L);
    if (std::fabs(best.d2) > 1e-12) turn(best.d2, R);
}

// ---------------------------------------------------------------------------
// finalize -> ChannelLoop
// ---------------------------------------------------------------------------

ChannelLoop ChannelBuilder::finalize_open(double eta_flat, double eta_wall, double slide) const {
    ChannelLoop loop;
    loop.closed = false;
    loop.moves = moves;
    loop.start_pose = start_pose;
    loop.start_width = start_width;
    loop.ramp_frac = ramp_frac;
    loop.eta_flat_ = eta_flat;
    loop.eta_wall_ = eta_wall;
    loop.slide_ = slide;
    double w = start_width;
    for (const ChannelMove& m : moves) {
        switch (m.type) {
            case ChannelMove::Type::Straight:
                loop.kappa_.append_const(m.a, 0.0);
                loop.width_.append_const(m.a, w);
                break;
            case ChannelMove::Type::Taper:
                loop.kappa_.append_const(m.a, 0.0);
                loop.width_.append_blend(m.a, w, m.b);
                w = m.b;
                break;
            case ChannelMove::Type::Turn:
            case ChannelMove::Type::TurnTaper: {
                KappaSpan sp = turn_span(m.a, m.b, ramp_frac, m.ramp);
                if (sp.ramp > 0) loop.kappa_.append_blend(sp.ramp, 0.0, sp.kappa0);
                double mid = sp.len - 2.0 * sp.ramp;
                if (mid > 0) loop.kappa_.append_const(mid, sp.kappa0);
                if (sp.ramp > 0) loop.kappa_.append_blend(sp.ramp, sp.kappa0, 0.0);
                if (m.type == ChannelMove::Type::TurnTaper) {
                    loop.width_.append_blend(sp.len, w, m.c);
                    w = m.c;
                } else {
                    loop.width_.append_const(sp.len, w);
                }
                break;
            }
        }
    }
    loop.build_tables();
    return loop;
}

ChannelLoop ChannelBuilder::finalize(double eta_flat, double eta_wall, double slide) const {
    ChannelLoop loop = finalize_open(eta_flat, eta_wall, slide);
    loop.closed = true;
    Pose e = loop.pose_at(loop.length());
    double gap = (e.p - start_pose.p).norm();
    double dth = wrap_angle(e.theta - start_pose.theta);
    if (gap > 1e-7 || std::fabs(dth) > 1e-7)
        throw ValidationError("channel loop does not close (gap " + std::to_string(gap) +
                              ", dtheta " + std::to_string(dth) + ")");
    if (std::fabs(width_ - start_width) > 1e-10)
        throw ValidationError("channel loop width does not close");
    return loop;
}

void ChannelLoop::build_tables() {
    len_ = kappa_.length();
    xi_total_ = width_.total_integral();
    if (len_ <= 0) throw ValidationError("empty channel");
    h_ = 1.0e-4;
    size_t n = (size_t)std::ceil(len_ / h_);
    cx_.resize(n + 1);
    cy_.resize(n + 1);
    ct_.resize(n + 1);
    double x = start_pose.p.x, y = start_pose.p.y;
    const double th0 = start_pose.theta;
    cx_[0] = x; cy_[0] = y; ct_[0] = th0;
    for (size_t i = 1; i <= n; ++i) {
        double s0 = (i - 1) * h_, s1 = std::min((double)i * h_, len_);
        const int m = 4;
        double hh = (s1 - s0) / m;
        double sx = 0, sy = 0;
        for (int k = 0; k <= m; ++k) {
            double th = th0 + kappa_.integral(s0 + k * hh);
            double wgt = (k == 0 || k == m) ? 1.0 : (k % 2 ? 4.0 : 2.0);
            sx += wgt * std::cos(th);
            sy += wgt * std::sin(th);
        }
        x += sx * hh / 3.0;
        y += sy * hh / 3.0;
        cx_[i] = x;
        cy_[i] = y;
        ct_[i] = th0 + kappa_.integral(s1);
    }
    index_.clear();
    for (double s = 0.0; s < len_; s += idx_step_) {
        IdxEntry e;
        e.s = s;
        e.p = center_at(s);
        e.reach = 0.95 * width_.value(s) + 1.4 * idx_step_;
        index_.push_back(e);
    }
}

// cubic Hermite on the dense table; derivatives are exact unit tangents
Vec2 ChannelLoop::center_at(double s) const {
    if (closed) {
        s = std::fmod(s, len_);
        if (s < 0) s += len_;
    } else {
        s = std::clamp(s, 0.0, len_);
    }
    size_t i = std::min((size_t)(s / h_), cx_.size() - 2);
    double t = (s - i * h_) / h_;
    double t2 = t * t, t3 = t2 * t;
    double h00 = 2 * t3 - 3 * t2 + 1, h10 = t3 - 2 * t2 + t;
    double h01 = -2 * t3 + 3 * t2, h11 = t3 - t2;
    double c0 = std::cos(ct_[i]), s0 = std::sin(ct_[i]);
    double c1 = std::cos(ct_[i + 1]), s1 = std::sin(ct_[i + 1]);
    return {h00 * cx_[i] + h10 * h_ * c0 + h01 * cx_[i + 1] + h11 * h_ * c1,
            h00 * cy_[i] + h10 * h_ * s0 + h01 * cy_[i + 1] + h11 * h_ * s1};
}

Pose ChannelLoop::pose_at(double s) const {
    double sm = s;
    if (closed) {
        sm = std::fmod(sm, len_);
        if (sm < 0) sm += len_;
    } else {
        sm = std::clamp(sm, 0.0, len_);
    }
    Pose p;
    p.p = center_at(sm);
    size_t i = std::min((size_t)(sm / h_), ct_.size() - 2);
    double t = (sm - i * h_) / h_;
    // Hermite on theta with exact derivative kappa at the nodes
    double t2 = t * t, t3 = t2 * t;
    double h00 = 2 * t3 - 3 * t2 + 1, h10 = t3 - 2 * t2 + t;
    double h01 = -2 * t3 + 3 * t2, h11 = t3 - t2;
    double k0 = kappa_.value(i * h_), k1 = kappa_.value((i + 1) * h_);
    p.theta = h00 * ct_[i] + h10 * h_ * k0 + h01 * ct_[i + 1] + h11 * h_ * k1;
    return p;
}

double ChannelLoop::s_of_xi(double xi) const {
    if (closed) {
        xi = std::fmod(xi, xi_total_);
        if (xi < 0) xi += xi_total_;
    } else {
        xi = std::clamp(xi, 0.0, xi_total_);
    }
    double lo = 0, hi = len_;
    for (int it = 0; it < 48; ++it) {
        double mid = 0.5 * (lo + hi);
        if (width_.integral(mid) < xi) lo = mid; else hi = mid;
    }
    double s = 0.5 * (lo + hi);
    for (int it = 0; it < 3; ++it) {
        double f = width_.integral(s) - xi;
        s = std::clamp(s - f / width_.value(s), 0.0, len_);
    }
    return s;
}

double ChannelLoop::rho_of_eta(double s, double eta) const {
    double k = kappa_.value(s), w = width_.value(s);
    double q = k * w * eta;
    if (std::fabs(q) < 1e-9) {
        double we = w * eta;
        return we * (1.0 + 0.5 * k * we + 0.5 * k * k * we * we);
    }
    double disc = 1.0 - 2.0 * q;
    if (disc <= 0.0)
        throw ValidationError("chart invalid: level " + std::to_string(eta) +
                              " does not exist at s=" + std::to_string(s));
    return (1.0 - std::sqrt(disc)) / k;
}

double ChannelLoop::eta_of_rho(double s, double rho) const {
    double k = kappa_.value(s), w = width_.value(s);
    return (rho - 0.5 * k * rho * rho) / w;
}

Vec2 ChannelLoop::chart_point(double xi, double eta) const {
    double s = s_of_xi(xi);
    double rho = rho_of_eta(s, eta);
    Pose ps = pose_at(s);
    return ps.p + ps.tangent().perp() * rho;
}

std::vector<ChannelLoop::Coords> ChannelLoop::project_all(Vec2 y, double eta_claim) const {
    std::vector<Coords> out;
    for (const IdxEntry& e : index_) {
        double dx = y.x - e.p.x, dy = y.y - e.p.y;
        if (std::fabs(dx) > e.reach || std::fabs(dy) > e.reach) continue;
        if (dx * dx + dy * dy > e.reach * e.reach) continue;
        double s = e.s;
        bool conv = false;
        for (int it = 0; it < 40; ++it) {
            Pose ps = pose_at(s);
            Vec2 t = ps.tangent();
            Vec2 dd = y - ps.p;
            double g = dd.dot(t);
            double rho = dd.dot(t.perp());
            double k = kappa_.value(closed ? std::fmod(s + len_, len_) : s);
            double gp = -(1.0 - k * rho);
            if (std::fabs(gp) < 1e-6) break;
            double step = -g / gp;
            double cap = 1.8 * idx_step_;
            if (std::fabs(step) > cap) step = std::copysign(cap, step);
            s += step;
            if (closed) {
                s = std::fmod(s, len_);
                if (s < 0) s += len_;
            } else if (s < -0.1 || s > len_ + 0.1) {
                break;
            }
            if (std::fabs(step) < 1e-12) { conv = true; break; }
        }
        if (!conv) continue;
        Pose ps = pose_at(s);
        Vec2 dd = y - ps.p;
        if (std::fabs(dd.dot(ps.tangent())) > 1e-8) continue;
        double rho = dd.dot(ps.tangent().perp());
        double w = width_.value(s);
        if (std::fabs(rho) > 1.5 * w) continue;
        double k = kappa_.value(s);
        if (1.0 - k * rho <= 1e-3) continue;
        double eta = eta_of_rho(s, rho);
        if (std::fabs(eta) > eta_claim) continue;
        bool dup = false;
        for (const Coords& c : out) {
            double ds = std::fabs(c.s - s);
            if (closed) ds = std::min(ds, len_ - ds);
            if (ds < 0.75 * idx_step_) { dup = true; break; }
        }
        if (!dup) out.push_back({s, rho, eta, width_.integral(s)});
    }
    return out;
}

int ChannelLoop::project_claims(Vec2 y, Coords out[], int max_claims,
                                double eta_claim) const {
    int count = 0;
    size_t ei = 0;
    const size_t n = index_.size();
    while (ei < n) {
        const IdxEntry& e0 = index_[ei];
        double dx = y.x - e0.p.x, dy = y.y - e0.p.y;
        if (std::fabs(dx) > e0.reach || std::fabs(dy) > e0.reach ||
            dx * dx + dy * dy > e0.reach * e0.reach) {
            ++ei;
            continue;
        }
        // cluster of consecutive hits; seed from the closest entry
        size_t best_i = ei;
        double best_d = dx * dx + dy * dy;
        size_t j = ei + 1;
        for (; j < n; ++j) {
            const IdxEntry& e = index_[j];
            double ddx = y.x - e.p.x, ddy = y.y - e.p.y;
            if (std::fabs(ddx) > e.reach || std::fabs(ddy) > e.reach) break;
            double d2 = ddx * ddx + ddy * ddy;
            if (d2 > e.reach * e.reach) break;
            if (d2 < best_d) {
                best_d = d2;
                best_i = j;
            }
        }
        ei = j;
        double s = index_[best_i].s;
        bool conv = false;
        for (int it = 0; it < 40; ++it) {
            Pose ps = pose_at(s);
            Vec2 t = ps.tangent();
            Vec2 dd = y - ps.p;
            double g = dd.dot(t);
            double rho = dd.dot(t.perp());
            double k = kappa_.value(closed ? std::fmod(s + len_, len_) : s);
            double gp = -(1.0 - k * rho);
            if (std::fabs(gp) < 1e-6) break;
            double step = -g / gp;
            double cap = 1.8 * idx_step_;
            if (std::fabs(step) > cap) step = std::copysign(cap, step);
            s += step;
            if (closed) {
                s = std::fmod(s, len_);
                if (s < 0) s += len_;
            } else if (s < -0.1 || s > len_ + 0.1) {
                break;
            }
            if (std::fabs(step) < 1e-12) { conv = true; break; }
        }
        if (!conv) continue;
        Pose ps = pose_at(s);
        Vec2 dd = y - ps.p;
        if (std::fabs(dd.dot(ps.tangent())) > 1e-8) continue;
        double rho = dd.dot(ps.tangent().perp());
        double w = width_.value(s);
        if (std::fabs(rho) > 1.5 * w) continue;
        double k = kappa_.value(s);
        if (1.0 - k * rho <= 1e-3) continue;
        double eta = eta_of_rho(s, rho);
        if (std::fabs(eta) > eta_claim) continue;
        bool dup = false;
        for (int q = 0; q < count; ++q) {
            double ds = std::fabs(out[q].s - s);
            if (closed) ds = std::min(ds, len_ - ds);
            if (ds < 0.75 * idx_step_) dup = true;
        }
        if (dup) continue;
        if (count < max_claims) out[count++] = {s, rho, eta, width_.integral(s)};
    }
    return count;
}

bool ChannelLoop::project(Vec2 y, Coords& out, double eta_claim) const {
    Coords claims[4];
    int n = project_claims(y, claims, 4, eta_claim);
    if (n == 0) return false;
    int best = 0;
    for (int i = 1; i < n; ++i)
        if (std::fabs(claims[i].eta) < std::fabs(claims[best].eta)) best = i;
    out = claims[best];
    return true;
}

double ChannelLoop::plateau(double eta) const {
    double a = std::fabs(eta);
    if (a <= eta_flat_) return 1.0;
    if (a >= eta_wall_) return 0.0;
    return 1.0 - smoothstep5((a - eta_flat_) / (eta_wall_ - eta_flat_));
}

double ChannelLoop::plateau_deriv(double eta) const {
    double a = std::fabs(eta);
    if (a <= eta_flat_ || a >= eta_wall_) return 0.0;
    double d = -smoothstep5_deriv((a - eta_flat_) / (eta_wall_ - eta_flat_)) /
               (eta_wall_ - eta_flat_);
    return eta >= 0 ? d : -d;
}

double ChannelLoop::hamiltonian(Vec2 y) const {
    Coords claims[4];
    int nc = project_claims(y, claims, 4, eta_wall_ + 0.12);
    double acc = 0.0;
    for (int i = 0; i < nc; ++i) {
        double e = std::clamp(claims[i].eta, -eta_wall_, eta_wall_);
        double sgn = e < 0 ? -1.0 : 1.0;
        double x = std::fabs(e), v;
        if (x <= eta_flat_) {
            v = x;
        } else {
            double L = eta_wall_ - eta_flat_;
            double t = (x - eta_flat_) / L;
            v = eta_flat_ + L * (t - smoothstep5_integral(t));
        }
        acc += -slide_ * sgn * v;
    }
    return acc;
}

Vec2 ChannelLoop::stream_field(Vec2 y) const {
    // superpose the contributions of every nearby tube section; each term is
    // grad-perp of a stream function, and summing keeps the field smooth
    // across handoffs where two skins approach
    Coords claims[4];
    int nc = project_claims(y, claims, 4, eta_wall_ + 0.12);
    Vec2 acc{};
    for (int i = 0; i < nc; ++i) {
        const Coords& c = claims[i];
        double P = plateau(c.eta);
        if (P == 0.0) continue;
        double s = c.s;
        double k = kappa_.value(s), kd = kappa_.deriv(s);
        double w = width_.value(s), wd = width_.deriv(s);
        double omk = 1.0 - k * c.rho;
        Pose ps = pose_at(s);
        Vec2 t = ps.tangent(), n = t.perp();
        double deta_drho = omk / w;
        double deta_ds = -kd * c.rho * c.rho / (2.0 * w) - c.eta * wd / w;
        double Fp = -slide_ * P;
        double at = deta_ds / omk, an = deta_drho;
        acc = acc + Vec2{at * n.x - an * t.x, at * n.y - an * t.y} * Fp;
    }
    return acc;
}

double ChannelLoop::max_speed_estimate() const {
    double m = 0.0;
    for (double s = 0.0; s < len_; s += 0.01)
        m = std::max(m, 1.0 / width_.value(s));
    return std::fabs(slide_) * m;
}

double ChannelLoop::min_chart_validity(double eta_abs) const {
    double m = std::numeric_limits<double>::infinity();
    for (double s = 0.0; s < len_; s += 1e-3)
        m = std::min(m, 1.0 - 2.0 * std::fabs(kappa_.value(s)) * width_.value(s) * eta_abs);
    return m;
}

Vec2 ChannelLoop::wall_point(double s, double sign) const {
    double rho = rho_of_eta(s, sign * eta_wall_);
    Pose ps = pose_at(s);
    return ps.p + ps.tangent().perp() * rho;
}

double stage_bump(double t, double t0, double t1) {
    if (t <= t0 || t >= t1) return 0.0;
    double u = (t - t0) / (t1 - t0);
    double um = 1.0 - u;
    return 140.0 * u * u * u * um * um * um / (t1 - t0);
}

} // namespace osf

// ---------------------------------------------------------------------------
// horseshoe transport design
// ---------------------------------------------------------------------------

namespace osf {

namespace {

// displacement of a turn move per unit radius, measured once per shape
Vec2 turn_unit_disp(double dtheta, double heading, double ramp_frac) {
    Pose p{{0, 0}, heading};
    Pose q = advance_span(p, turn_span(dtheta, 1.0, ramp_frac));
    return q.p;
}

double unit_turn_dy(double ramp_frac) {
    return std::fabs(turn_unit_disp(M_PI, M_PI, ramp_frac).y);
}

struct SerpParams {
    int passes = 1, levels = 0;
    double y_top = 0, pitch = 0, R0 = 0;
    double w_b = 0, w_t = 0, w_e = 0;
    double l_b = 0, l_tp = 0, l_tpe = 0;
    double turn_arclen = 0, turn_xi = 0, cell_xi = 0;
    double reach_out_claim = 0, reach_out_mat = 0, reach_in_mat = 0;
    double l1 = 0, d_land_in = 0, lN = 0, d_land_out = 0;
    double x_shift = 0, u_W = 0, u_E = 0;
    double margin = -1;
};

// solve serpentine parameters: flux spacing A between E cross-sections, with
// entry/exit stub landings at |x| = x_land inside the side boxes
SerpParams solve_serpentine(int N, double A, double eta_mat, double eta_claim,
                            double min_margin, double rf, double x_land) {
    SerpParams best;
    const double dyu = unit_turn_dy(rf);
    for (int passes : {1, 3, 5}) {
        // odd N gets a dummy level at the mouth so every E lands on a turn or
        // the terminal stub with the right box parity; levels is always even
        int levels = N * passes + (N % 2);
        if (levels < 2) continue;
        for (double y_top : {0.210, 0.205, 0.200, 0.190, 0.180, 0.165}) {
            double pitch = 2.0 * y_top / (levels - 1);
            double R0 = pitch / dyu;
            KappaSpan tsp = turn_span(M_PI, R0, rf);
            double w_cap = std::min({0.85 * pitch, pitch - 0.010, 0.11});
            for (double w_b = w_cap; w_b >= 0.010; w_b *= 0.93) {
                SerpParams s;
                s.passes = passes;
                s.levels = levels;
                s.y_top = y_top;
                s.pitch = pitch;
                s.R0 = R0;
                s.w_b = w_b;
                s.w_t = std::min(0.70 * R0, 0.95 * w_b);
                s.turn_arclen = tsp.len;
                s.turn_xi = s.w_t * tsp.len;
                s.l_tp = std::clamp(1.6 * (w_b - s.w_t), 0.015, 0.06);
                double cell_target = A / passes;
                double taper_xi = s.l_tp * (w_b + s.w_t);
                s.l_b = 2.0 * s.l_tp + (cell_target - s.turn_xi - taper_xi) / w_b;
                s.cell_xi = s.turn_xi + taper_xi + (s.l_b - 2.0 * s.l_tp) * w_b;
                if (s.l_b < 2.0 * s.l_tp + 0.04 || s.l_b > 1.05) continue;
                double K = R0 * s.w_t;
                double rin2 = R0 * R0 - 2.0 * K * eta_claim;
                if (rin2 <= 1e-7) continue;
                s.reach_out_claim = std::sqrt(R0 * R0 + 2.0 * K * eta_claim);
                s.reach_out_mat = std::sqrt(R0 * R0 + 2.0 * K * eta_mat);
                s.reach_in_mat = std::sqrt(std::max(R0 * R0 - 2.0 * K * eta_mat, 1e-12));
                double x_E0 = 0.5 * s.l_b;
                double m_in = (x_E0 + s.reach_in_mat) - 1.0 / 3.0;
                double m_out = 0.5 - (x_E0 + s.reach_out_mat);
                double m_box;
                if (levels >= 3) {
                    // turns on both sides: the layout must fit symmetrically
                    s.x_shift = 0.0;
                    m_box = std::min(m_in, m_out);
                } else {
                    // single turn side: a global shift can center it
                    s.x_shift = 0.5 * (m_out - m_in);
                    m_box = 0.5 * (m_in + m_out);
                }
                s.u_W = -0.5 * s.l_b + s.x_shift;
                s.u_E = 0.5 * s.l_b + s.x_shift;
                double m_y = 0.25 - (y_top + w_b * (eta_mat + 0.06));
                double m_turn = 0.25 - ((levels > 2 ? y_top - 0.5 * pitch : 0.0) +
                                        s.reach_out_mat + 0.004);
                double m_side = (levels > 2) ? (pitch - s.reach_out_claim) : 1.0;
                double m_gap = pitch - w_b - 0.0055;
                // entry / exit gadget feasibility, trying a few stub widths
                bool gadget_ok = false;
                double we_cap = 2.0 * (pitch - 0.0045) - w_b; // stub vs next branch
                for (double we : {std::clamp(0.6 * w_b, 0.016, 0.05), 0.05, 0.035, 0.025}) {
                    if (we > we_cap || std::fabs(we - w_b) < 0.004) continue;
                    s.w_e = we;
                    s.l_tpe = std::clamp(1.6 * std::fabs(w_b - we), 0.03, 0.09);
                    double half_turn_xi = 0.5 * s.turn_xi;
                    double taper_e_xi = s.l_tpe * 0.5 * (we + w_b);
                    double taper_t_xi = s.l_tp * 0.5 * (w_b + s.w_t);
                    double C1 = A - (passes - 1) * s.cell_xi - half_turn_xi -
                                taper_e_xi - taper_t_xi;
                    double C2in = x_land - s.u_W - s.l_tp - s.l_tpe;
                    s.l1 = (C1 - we * C2in) / (w_b - we);
                    s.d_land_in = C2in - s.l1;
                    double C2out = (levels % 2 == 0)
                                       ? (x_land - s.u_W - s.l_tp - s.l_tpe)
                                       : (s.u_E + x_land - s.l_tp - s.l_tpe);
                    s.lN = (C1 - we * C2out) / (w_b - we);
                    s.d_land_out = C2out - s.lN;
                    if (s.l1 > 0.03 && s.d_land_in > 0.02 && s.lN > 0.03 &&
                        s.d_land_out > 0.02 && s.l1 < 1.05 && s.lN < 1.05) {
                        gadget_ok = true;
                        break;
                    }
                }
                if (!gadget_ok) continue;
                double m = std::min({m_box, m_y, m_turn, m_side, m_gap});
                if (m > best.margin) {
                    best = s;
                    best.margin = m;
                    if (std::getenv("OSF_SOLVER_DEBUG"))
                        std::fprintf(stderr,
                                     "cand p=%d lev=%d ytop=%.3f wb=%.4f lb=%.3f "
                                     "mbox=%.4f my=%.4f mturn=%.4f mside=%.4f mgap=%.4f\n",
                                     passes, levels, y_top, w_b, s.l_b, m_box, m_y,
                                     m_turn, m_side, m_gap);
                }
            }
        }
        if (best.margin >= min_margin) break; // prefer the fewest passes
    }
    if (best.margin < min_margin)
        throw CertificationFailed("serpentine layout failed for N=" + std::to_string(N) +
                                  " (margin " + std::to_string(best.margin) + ")");
    return best;
}

} // namespace

HorseshoeDesign design_horseshoe(int N, const HorseshoeTuning& tu) {
    if (N < 2) throw DomainError("horseshoe symbol count must be >= 2");
    const double rf = 0.35;
    const double w_thin = 0.10;
    const double R_conn = 0.15;
    const double A = tu.w_cart / (2.0 * N);
    const double eta_mat = 0.25 / tu.w_cart;
    if (eta_mat >= tu.eta_flat - 0.003)
        throw ValidationError("cartridge too narrow for the plateau profile");

    const double x_land_target = 0.413;
    SerpParams sp = solve_serpentine(N, A, eta_mat, tu.eta_wall + 0.12,
                                     tu.min_margin, rf, x_land_target);
    if (tu.debug)
        std::fprintf(stderr,
                     "serp N=%d passes=%d levels=%d y_top=%.3f pitch=%.4f R0=%.4f "
                     "w_b=%.4f w_t=%.4f w_e=%.4f l_b=%.4f l1=%.4f lN=%.4f "
                     "d_in=%.4f d_out=%.4f margin=%.4f\n",
                     N, sp.passes, sp.levels, sp.y_top, sp.pitch, sp.R0, sp.w_b, sp.w_t,
                     sp.w_e, sp.l_b, sp.l1, sp.lN, sp.d_land_in, sp.d_land_out, sp.margin);

    // ------------------------------ loop 1 ----------------------------------
    // cartridge -> climb -> shared parking arc -> return; orientation fixed
    const double cart_rear = -0.42, cart_front = 0.38;
    Pose cart_start{{cart_rear, 0.0}, 0.0};
    ChannelBuilder b1(cart_start, tu.w_cart, rf);
    b1.straight(cart_front - cart_rear);
    b1.taper(0.20, w_thin);
    b1.straight(0.02);
    Pose park_in{{tu.park_radius * std::cos(tu.park_phi0),
                  tu.park_radius * std::sin(tu.park_phi0)},
                 tu.park_phi0 + M_PI / 2.0};
    Pose pre_arc{park_in.p - park_in.tangent() * 0.20, park_in.theta};
    b1.connect_to(pre_arc, R_conn);
    b1.taper(0.20, tu.w_park);
    double s1_park_begin = b1.arclen();
    b1.turn(tu.park_phi1 - tu.park_phi0, tu.park_radius, tu.park_ramp);
    double s1_park_end = b1.arclen();
    Pose arc_exit_pose = b1.pose();
    b1.taper(0.16, w_thin);
    b1.connect_to(Pose{{-0.72, 0.0}, 0.0}, 0.13);
    b1.taper(0.22, tu.w_cart);
    {
        Vec2 gap = cart_start.p - b1.pose().p;
        double along = gap.dot(b1.pose().tangent());
        double across = std::fabs(gap.dot(b1.pose().tangent().perp()));
        if (along < 0.005 || across > 1e-8)
            throw ValidationError("loop1: closing straight misaligned");
        b1.straight(along);
    }
    ChannelLoop loop1 = b1.finalize(tu.eta_flat, tu.eta_wall, 0.0);

    auto xi1_of_x = [&](double x) { return loop1.xi_of_s(x - cart_rear); };
    double xi_mat_lo = xi1_of_x(-0.25), xi_mat_hi = xi1_of_x(0.25);
    double park_mid_xi =
        0.5 * (loop1.xi_of_s(s1_park_begin) + loop1.xi_of_s(s1_park_end));
    double slide1 = park_mid_xi - 0.5 * (xi_mat_lo + xi_mat_hi);
    loop1.set_slide(slide1);
    {
        double s_lo = loop1.s_of_xi(xi_mat_lo + slide1);
        double s_hi = loop1.s_of_xi(xi_mat_hi + slide1);
        KappaSpan psp = turn_span(tu.park_phi1 - tu.park_phi0, tu.park_radius, rf,
                                  tu.park_ramp);
        double pad = psp.ramp + 0.02;
        if (s_lo < s1_park_begin + pad || s_hi > s1_park_end - pad)
            throw ValidationError("loop1: parked material leaves the shared arc");
    }

    // ------------------------------ loop 2 ----------------------------------
    // serpentine entered from the top east; for odd N the first level is a
    // dummy so E_N lands on the first turn (west box) instead of the stub
    const bool dummy_mouth = (N % 2 == 1);
    std::string fail_msg = "horseshoe design failed";
    for (int attempt : {0}) {
        try {
            (void)attempt;
            Pose l2_start{arc_exit_pose.p, arc_exit_pose.theta + M_PI};
            ChannelBuilder b2(l2_start, tu.w_park, rf);
            double s2_park_begin = b2.arclen();
            b2.turn(-(tu.park_phi1 - tu.park_phi0), tu.park_radius, tu.park_ramp);
            double s2_park_end = b2.arclen();

            // entry sweep: two tapering bends ending on the stub level
            Pose ux = b2.pose();
            double w_mid_entry = std::min(0.06, std::max(0.035, 1.6 * sp.w_e));
            double d1_best = 0, R2 = -1, dth2 = 0;
            {
                double best_score = 1e9;
                for (double deg1 : {-6.0, -10.0, -14.0, -18.0, -24.0, -30.0, -36.0}) {
                    double d1 = deg1 * M_PI / 180.0;
                    Vec2 u1 = turn_unit_disp(d1, ux.theta, rf);
                    double y1 = ux.p.y + 0.28 * u1.y;
                    double th1 = ux.theta + d1;
                    double dt2 = wrap_angle(-M_PI - th1);
                    if (dt2 > 0) dt2 -= 2.0 * M_PI;
                    Vec2 u2 = turn_unit_disp(dt2, th1, rf);
                    if (u2.y >= -1e-6) continue;
                    double R2c = (y1 - sp.y_top) / (-u2.y);
                    double R2_lo = std::max(0.075, 1.45 * w_mid_entry);
                    double score = std::fabs(R2c - 0.13);
                    if (R2c > R2_lo && R2c < 0.40 && score < best_score) {
                        best_score = score;
                        d1_best = d1;
                        R2 = R2c;
                        dth2 = dt2;
                    }
                }
            }
            if (R2 < 0) throw ValidationError("entry sweep: no feasible bend pair");
            b2.turn_taper(d1_best, 0.28, w_mid_entry);
            ux = b2.pose();
            {
                double dt2 = wrap_angle(-M_PI - ux.theta);
                if (dt2 > 0) dt2 -= 2.0 * M_PI;
                dth2 = dt2;
                Vec2 u2 = turn_unit_disp(dth2, ux.theta, rf);
                R2 = (ux.p.y - sp.y_top) / (-u2.y);
            }
            if (R2 < std::max(0.075, 1.35 * sp.w_e) || R2 > 0.45)
                throw ValidationError("entry sweep radius out of range");
            b2.turn_taper(dth2, R2, sp.w_e);
            ux = b2.pose();
            if (std::fabs(ux.p.y - sp.y_top) > 1e-6 ||
                std::fabs(wrap_angle(ux.theta - M_PI)) > 1e-9)
                throw ValidationError("entry sweep misses the stub level");
            double x_se = ux.p.x;
            double l_stub_in, l1;
            if (dummy_mouth) {
                l_stub_in = 0.10;
                l1 = x_se - l_stub_in - sp.l_tpe - sp.l_tp - sp.u_W;
                if (l1 < 0.04 || l1 > 1.1)
                    throw ValidationError("dummy entry branch infeasible: " +
                                          std::to_string(l1));
            } else {
                l1 = sp.l1;
                l_stub_in = x_se - x_land_target + sp.d_land_in;
                if (l_stub_in < sp.d_land_in + 0.02 || l_stub_in > 0.5)
                    throw ValidationError("entry stub infeasible");
            }

            double s2_stub_in = b2.arclen();
            b2.straight(l_stub_in);
            b2.taper(sp.l_tpe, sp.w_b);
            b2.straight(l1);
            b2.taper(sp.l_tp, sp.w_t);
            {
                Pose up = b2.pose();
                if (std::fabs(up.p.x - sp.u_W) > 5e-7)
                    throw ValidationError("branch-1 tangent mismatch");
            }

            std::vector<double> turn_mid_s;
            double heading_u = M_PI;
            for (int j = 1; j <= sp.levels - 1; ++j) {
                double dth = (std::fabs(wrap_angle(heading_u - M_PI)) < 1e-9) ? M_PI : -M_PI;
                double s_before = b2.arclen();
                b2.turn(dth, sp.R0);
                turn_mid_s.push_back(0.5 * (s_before + b2.arclen()));
                heading_u = wrap_angle(heading_u + dth);
                if (j < sp.levels - 1) {
                    b2.taper(sp.l_tp, sp.w_b);
                    b2.straight(sp.l_b - 2.0 * sp.l_tp);
                    b2.taper(sp.l_tp, sp.w_t);
                }
            }
            b2.taper(sp.l_tp, sp.w_b);
            b2.straight(sp.lN);
            b2.taper(sp.l_tpe, sp.w_e);
            double s2_stub_out = b2.arclen();
            b2.straight(sp.d_land_out + 0.05);
            // levels is even, so the exit is on the east; drop below the strip
            b2.turn_taper(-M_PI / 2.0, 0.13, w_thin);
            {
                double drop = b2.pose().p.y - (-0.40);
                if (drop > 0.01) b2.straight(drop);
            }
            b2.connect_to(Pose{{-0.05, -0.52}, M_PI}, R_conn);
            b2.connect_to(Pose{{-0.60, -0.36}, 150.0 * M_PI / 180.0}, 0.13);
            Pose T1{l2_start.p - l2_start.tangent() * 0.265, l2_start.theta};
            b2.connect_to(T1, R_conn);
            b2.taper(0.24, tu.w_park);
            {
                Vec2 gap = l2_start.p - b2.pose().p;
                double along = gap.dot(b2.pose().tangent());
                double across = std::fabs(gap.dot(b2.pose().tangent().perp()));
                if (along < 0.005 || across > 1e-8)
                    throw ValidationError("loop2: closing straight misaligned");
                b2.straight(along);
            }
            ChannelLoop loop2 = b2.finalize(tu.eta_flat, tu.eta_wall, 0.0);

            // slide 2 from parked E positions and landing targets
            std::vector<double> parked_xi(N + 1);
            for (int i = 0; i <= N; ++i) {
                double x = -0.25 + i / (2.0 * N);
                Vec2 parked = loop1.chart_point(xi1_of_x(x) + slide1, 0.0);
                ChannelLoop::Coords c;
                if (!loop2.project(parked, c, 0.8))
                    throw ValidationError("loop2 cannot see parked material");
                parked_xi[i] = c.xi;
            }
            std::vector<double> targets;
            if (!dummy_mouth)
                targets.push_back(loop2.xi_of_s(s2_stub_in + (l_stub_in - sp.d_land_in)));
            int first_turn = dummy_mouth ? 1 : 0;
            for (int k = 0; k < N - 1 + (dummy_mouth ? 1 : 0); ++k) {
                if (!dummy_mouth && k == 0) continue; // handled via stub above
                (void)first_turn;
            }
            if (dummy_mouth) {
                for (int k = 0; k <= N - 1; ++k)
                    targets.push_back(loop2.xi_of_s(turn_mid_s[k * sp.passes]));
            } else {
                for (int k = 1; k <= N - 1; ++k)
                    targets.push_back(loop2.xi_of_s(turn_mid_s[k * sp.passes - 1]));
            }
            targets.push_back(loop2.xi_of_s(s2_stub_out + sp.d_land_out));
            std::vector<double> pk = parked_xi, tg = targets;
            std::sort(pk.begin(), pk.end());
            std::sort(tg.begin(), tg.end());
            double slide2 = tg.front() - pk.front();
            for (int i = 0; i <= N; ++i) {
                double resid = (tg[i] - pk[i]) - slide2;
                if (std::fabs(resid) > 1e-3)
                    throw ValidationError("E spacing mismatch " + std::to_string(resid));
            }
            loop2.set_slide(slide2);
            {
                KappaSpan psp = turn_span(tu.park_phi1 - tu.park_phi0, tu.park_radius, rf,
                                          tu.park_ramp);
                double xi_p0 = loop2.xi_of_s(s2_park_begin + psp.ramp + 0.02);
                double xi_p1 = loop2.xi_of_s(s2_park_end - psp.ramp - 0.02);
                double lo = std::min(xi_p0, xi_p1), hi = std::max(xi_p0, xi_p1);
                for (double x : pk)
                    if (x < lo || x > hi)
                        throw ValidationError("parked material outside the shared arc (loop2)");
            }

            HorseshoeDesign d;
            d.N = N;
            d.tuning = tu;
            d.loop1 = loop1;
            d.loop2 = loop2;
            d.entry_side = 1;
            d.cart_s_at_x0 = -cart_rear;
            d.square_eta = eta_mat;

            // --------------------------- validation ------------------------
            Box strip{-0.5, 0.5, -0.25, 0.25, true};
            Box dplus{1.0 / 3.0, 0.5, -0.25, 0.25, true};
            Box dminus{-0.5, -1.0 / 3.0, -0.25, 0.25, true};
            double min_box = 1e9, min_strip = 1e9;
            for (int i = 0; i <= N; ++i) {
                const Box& target = (i % 2 == 0) ? dplus : dminus;
                for (double f : {-1.0, -0.62, 0.0, 0.62, 1.0}) {
                    Vec2 img = d.predict_E_point(i, f);
                    min_box = std::min(min_box, box_clearance(target, {img.x, img.y}));
                    if (tu.debug && f == 0.0)
                        std::fprintf(stderr, "  E%d -> (%.4f, %.4f)\n", i, img.x, img.y);
                }
            }
            if (min_box < tu.min_margin)
                throw ValidationError("E landing margin " + std::to_string(min_box));
            for (int ix = 0; ix <= 14; ++ix)
                for (int iy = 0; iy <= 14; ++iy) {
                    Vec2 p{-0.25 + ix / 28.0, -0.25 + iy / 28.0};
                    Vec2 img = d.predict(p);
                    min_strip = std::min(min_strip, box_clearance(strip, {img.x, img.y}));
                }
            if (min_strip < tu.min_margin)
                throw ValidationError("square image margin " + std::to_string(min_strip));
            d.min_box_margin = min_box;
            d.min_strip_margin = min_strip;

            for (const ChannelLoop* L : {&d.loop1, &d.loop2}) {
                if (L->min_chart_validity(tu.eta_wall + 0.05) < 0.03)
                    throw ValidationError("chart validity too tight");
                for (double s = 0; s < L->length(); s += 0.008) {
                    Vec2 wp = L->wall_point(s, +1), wm = L->wall_point(s, -1);
                    double r = std::max(wp.norm(), wm.norm());
                    if (r > tu.ball_limit) {
                        Vec2 w = wp.norm() > wm.norm() ? wp : wm;
                        throw ValidationError("channel leaves the ball: " + std::to_string(r) +
                                              " at (" + std::to_string(w.x) + "," +
                                              std::to_string(w.y) + ") s=" + std::to_string(s) +
                                              "/" + std::to_string(L->length()) +
                                              (L == &d.loop1 ? " loop1" : " loop2"));
                    }
                }
            }
            int overlap_count = 0;
            for (int gx = 0; gx < 132; ++gx)
                for (int gy = 0; gy < 132; ++gy) {
                    Vec2 p{-0.975 + gx * 0.0148, -0.975 + gy * 0.0148};
                    int which = 0;
                    for (const ChannelLoop* L : {&d.loop1, &d.loop2}) {
                        ++which;
                        auto claims = L->project_all(p, L->eta_wall());
                        if (claims.size() > 1) {
                            ++overlap_count;
                            std::string msg = "tube overlap loop" + std::to_string(which) +
                                              " near (" + std::to_string(p.x) + "," +
                                              std::to_string(p.y) + "):";
                            for (auto& cc : claims)
                                msg += " {s=" + std::to_string(cc.s) +
                                       ",eta=" + std::to_string(cc.eta) + "}";
                            if (!tu.debug) throw ValidationError(msg);
                            if (overlap_count < 6) std::fprintf(stderr, "%s\n", msg.c_str());
                        }
                    }
                }
            if (overlap_count > 0) throw ValidationError("tube overlaps present");
            return d;
        } catch (const Error& e) {
            fail_msg = std::string("horseshoe design (N=") + std::to_string(N) + "): " +
                       e.what();
        }
    }
    throw CertificationFailed(fail_msg);
}

Vec2 HorseshoeDesign::predict(Vec2 p) const {
    ChannelLoop::Coords c;
    Vec2 q = p;
    if (loop1.project(q, c)) {
        double dxi = loop1.slide_of_eta(c.eta);
        if (dxi != 0.0) q = loop1.chart_point(c.xi + dxi, c.eta);
    }
    if (loop2.project(q, c)) {
        double dxi = loop2.slide_of_eta(c.eta);
        if (dxi != 0.0) q = loop2.chart_point(c.xi + dxi, c.eta);
    }
    return q;
}

Vec2 HorseshoeDesign::predict_E_point(int i, double eta_frac) const {
    double x = -0.25 + i / (2.0 * N);
    double y = eta_frac * 0.25;
    return predict({x, y});
}

} // namespace osf
