#ifndef OSF_CHANNEL_HPP
#define OSF_CHANNEL_HPP

// Closed-loop transport channels.
//
// A channel is a closed tube around a smooth centerline C(s) with curvature
// profile kappa(s) and flux-width profile w(s). The stream function
// H(y) = F(eta(y)) is constant on the tube's level curves, where (xi, eta)
// are area coordinates: xi = int_0^s w, and eta solves
//     rho - kappa(s) rho^2 / 2 = w(s) eta,       y = C(s) + rho * n(s).
// The chart (xi, eta) -> y has unit Jacobian, so the Hamiltonian flow of H
// pulled back to chart coordinates is the exact shear
//     xi' = -F'(eta),   eta' = 0.
// With F'(eta) = -slide * P(eta) (P a plateau profile), one unit of time
// budget translates material rigidly by +slide * P(eta) in xi. Material on
// the plateau therefore slides by exactly `slide`; everything outside the
// tube is fixed. Divergence-free by construction.

#include <cstdint>
#include <optional>
#include <vector>

#include "osf/errors.hpp"
#include "osf/torus.hpp"

namespace osf {

// quintic smoothstep and helpers
double smoothstep5(double t);        // 6t^5 - 15t^4 + 10t^3 clamped to [0,1]
double smoothstep5_deriv(double t);
double smoothstep5_integral(double t); // int_0^t smoothstep5, exact polynomial

// piecewise profile made of constant pieces and quintic blends
class Profile {
public:
    void append_const(double len, double v);
    void append_blend(double len, double v_from, double v_to);
    double length() const { return end_; }
    double value(double s) const;
    double deriv(double s) const;
    double integral(double s) const; // int_0^s value, exact
    double total_integral() const;
    bool constant_on(double s0, double s1) const; // no blend intersects [s0,s1]

private:
    struct Seg { double s0, s1, v0, v1; };
    std::vector<Seg> segs_;
    std::vector<double> cum_;
    double end_ = 0.0;
    const Seg& locate(double s) const;
};

struct Pose {
    Vec2 p;
    double theta = 0.0;
    Vec2 tangent() const { return {std::cos(theta), std::sin(theta)}; }
};

// move list for (de)serialization and deterministic rebuild
struct ChannelMove {
    enum class Type : std::uint8_t { Straight, Taper, Turn, TurnTaper };
    Type type;
    // Straight: a=len; Taper: a=len, b=new_width; Turn: a=dtheta, b=radius;
    // TurnTaper: a=dtheta, b=radius, c=new_width
    double a = 0, b = 0, c = 0;
    double ramp = 0; // curvature ramp override for turns (0 = ramp_frac * radius)
};

class ChannelLoop;

class ChannelBuilder {
public:
    ChannelBuilder(Pose start, double width, double ramp_frac = 0.35);

    void straight(double len);
    void taper(double len, double new_width);
    void turn(double dtheta, double radius, double ramp_override = 0.0);
    void turn_taper(double dtheta, double radius, double new_width,
                    double ramp_override = 0.0);
    // arc-straight-arc connector, Newton-corrected for the smooth-ramp turns
    void connect_to(Pose target, double turn_radius);

    Pose pose() const { return cur_; }
    double width() const { return width_; }
    double arclen() const { return arclen_; }

    // closes the loop back to the start pose (connect_to + straight gap fix)
    // and produces the finalized geometry
    ChannelLoop finalize(double eta_flat, double eta_wall, double slide) const;
    ChannelLoop finalize_open(double eta_flat, double eta_wall, double slide) const;

    std::vector<ChannelMove> moves;
    Pose start_pose;
    double start_width;
    double ramp_frac;

private:
    Pose cur_;
    double width_;
    double arclen_;
    void apply_move(const ChannelMove& m);
};

// finalized, table-backed loop geometry with chart and field evaluation
class ChannelLoop {
public:
    struct Coords {
        double s = 0, rho = 0, eta = 0, xi = 0;
    };

    double length() const { return len_; }
    double xi_total() const { return xi_total_; }

    double theta_at(double s) const { return kappa_.integral(s); }
    double kappa_at(double s) const { return kappa_.value(s); }
    double kappa_deriv_at(double s) const { return kappa_.deriv(s); }
    double width_at(double s) const { return width_.value(s); }
    double width_deriv_at(double s) const { return width_.deriv(s); }
    double xi_of_s(double s) const { return width_.integral(s); }
    double s_of_xi(double xi) const;
    Vec2 center_at(double s) const;   // C(s)
    Pose pose_at(double s) const;

    // nearest-tube chart coordinates; false when no claim with |eta| <= eta_claim
    bool project(Vec2 y, Coords& out, double eta_claim = 0.62) const;
    // all distinct nearby claims without allocation; returns the count
    int project_claims(Vec2 y, Coords out[], int max_claims, double eta_claim) const;
    // all claims (for validation)
    std::vector<Coords> project_all(Vec2 y, double eta_claim) const;

    Vec2 chart_point(double xi, double eta) const;

    double hamiltonian(Vec2 y) const;   // F(eta(y)), 0 outside
    Vec2 stream_field(Vec2 y) const;    // grad^perp H, exact formulas

    double slide() const { return slide_; }
    void set_slide(double s) { slide_ = s; }
    double eta_flat() const { return eta_flat_; }
    double eta_wall() const { return eta_wall_; }
    double plateau(double eta) const;       // P(eta)
    double plateau_deriv(double eta) const;
    double slide_of_eta(double eta) const { return slide_ * plateau(eta); }

    double max_speed_estimate() const;

    // material-free validation helpers
    double min_chart_validity(double eta_abs) const; // min over s of 1 - 2|kappa| w eta
    Vec2 wall_point(double s, double sign) const;    // wall curve at eta = sign*eta_wall

    bool closed = true;
    std::vector<ChannelMove> moves; // provenance for serialization
    Pose start_pose;
    double start_width = 0;
    double ramp_frac = 0.35;

private:
    friend class ChannelBuilder;
    void build_tables();
    double rho_of_eta(double s, double eta) const;
    double eta_of_rho(double s, double rho) const;

    Profile kappa_, width_;
    double len_ = 0, xi_total_ = 0;
    double eta_flat_ = 0.45, eta_wall_ = 0.5;
    double slide_ = 0;

    // dense cubic-Hermite table for C(s); theta/kappa/width are exact
    double h_ = 0;
    std::vector<double> cx_, cy_, ct_; // position and theta at nodes
    // coarse spatial index for projection seeding
    struct IdxEntry { double s; Vec2 p; double reach; };
    std::vector<IdxEntry> index_;
    double idx_step_ = 0.02;
};

// ---------------------------------------------------------------------------
// horseshoe transport design: two time-staged loops
// ---------------------------------------------------------------------------

struct HorseshoeTuning {
    double y_top = 0.205;     // outermost serpentine branch level
    double w_cart = 0.54;     // cartridge width (must exceed the square side 0.5)
    double w_park = 0.24;     // parking width
    double park_radius = 0.75;
    double park_phi0 = 35.0 * M_PI / 180.0;
    double park_phi1 = 145.0 * M_PI / 180.0;
    double park_ramp = 0.10;  // curvature ramp length of the parking arc
    double eta_flat = 0.47;
    double eta_wall = 0.50;
    double connector_radius = 0.11;
    double min_margin = 0.0035; // required geometric margin in the boxes/strip
    double ball_limit = 0.955; // wall containment radius
    bool debug = false;        // dump layout diagnostics to stderr
    double t1_lo = 0.02, t1_hi = 0.49; // stage time windows
    double t2_lo = 0.51, t2_hi = 0.98;
};

struct HorseshoeDesign {
    int N = 0;
    HorseshoeTuning tuning;
    ChannelLoop loop1, loop2;
    int entry_side = +1; // +1: serpentine entry stub in the right box
    // material bookkeeping (loop-1 cartridge)
    double cart_s_at_x0 = 0; // s with cartridge centerline x == 0
    double square_eta = 0;   // |eta| of the square's top edge
    // validation results
    double min_box_margin = 0;   // over predicted E-segment landings
    double min_strip_margin = 0; // over predicted square image
    // exact analytic time-one map prediction (identity outside the tubes)
    Vec2 predict(Vec2 p) const;
    // where an eta-level of segment E_i lands (chart arithmetic)
    Vec2 predict_E_point(int i, double eta_frac) const;
};

// Lays out and validates both loops; throws CertificationFailed when the
// geometry cannot be validated for this N.
HorseshoeDesign design_horseshoe(int N, const HorseshoeTuning& tuning = {});

// time bump supported on (t0,t1), unit integral, C^2
double stage_bump(double t, double t0, double t1);

} // namespace osf

#endif
