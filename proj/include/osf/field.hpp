#ifndef OSF_FIELD_HPP
#define OSF_FIELD_HPP

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "osf/channel.hpp"
#include "osf/modulus.hpp"
#include "osf/torus.hpp"

namespace osf {

// cutoff profile: 1 inside inner_radius, 0 outside outer_radius, quintic blend;
// the gradient bound sup|chi'| = 1.875 / (outer - inner) stays below the 9/r
// budget used by the constructions here
struct CutoffSpec {
    double inner_radius = 0;
    double outer_radius = 0;
    double value(double r) const {
        if (r <= inner_radius) return 1.0;
        if (r >= outer_radius) return 0.0;
        return 1.0 - smoothstep5((r - inner_radius) / (outer_radius - inner_radius));
    }
    double deriv(double r) const {
        if (r <= inner_radius || r >= outer_radius) return 0.0;
        return -smoothstep5_deriv((r - inner_radius) / (outer_radius - inner_radius)) /
               (outer_radius - inner_radius);
    }
};

// dense 1-periodic orbit t -> X_t(x0), cubic Hermite between accepted steps
struct OrbitPath {
    std::vector<double> t;
    std::vector<Vec2> x; // unwrapped plane coordinates
    std::vector<Vec2> v;
    double period = 1.0; // time extent stored (N for an N-periodic orbit)
    TorusPoint start{};
    TorusPoint at(double time) const;          // wrapped position
    Vec2 at_unwrapped(double time) const;
};

class FieldSpec;

struct Block {
    enum class Kind {
        HorseshoeStage,
        RotationBump,
        Rescaled,
        FrozenTube,
        OrbitInserted,
        Constant,
        TimeCompressed,
    };
    virtual ~Block() = default;
    virtual Kind kind() const = 0;
    // t already reduced mod 1; p canonical
    virtual Vec2 eval(double t, TorusPoint p) const = 0;
    // time seam points within [0,1) where the field is only piecewise smooth
    virtual void seams(std::vector<double>& out) const = 0;
    // static spatial support as (center, radius); nullopt = global/moving
    virtual std::optional<std::pair<TorusPoint, double>> support() const { return std::nullopt; }
    virtual double max_speed() const = 0;
};

using BlockPtr = std::shared_ptr<const Block>;

class FieldSpec {
public:
    FieldSpec() = default;
    explicit FieldSpec(std::vector<BlockPtr> blocks) : blocks_(std::move(blocks)) {}

    Vec2 eval(double t, TorusPoint p) const;
    const std::vector<BlockPtr>& blocks() const { return blocks_; }
    std::vector<double> seams() const; // sorted unique in [0,1)
    bool zero_outside_static_supports() const;
    bool outside_all_supports(TorusPoint p, double margin = 0.0) const;
    double max_speed() const;
    bool empty() const { return blocks_.empty(); }

    FieldSpec plus(const FieldSpec& other) const;

private:
    std::vector<BlockPtr> blocks_;
};

// ---------------------------------------------------------------------------
// concrete blocks
// ---------------------------------------------------------------------------

struct HorseshoeStageBlock : Block {
    std::shared_ptr<const HorseshoeDesign> design;
    Kind kind() const override { return Kind::HorseshoeStage; }
    Vec2 eval(double t, TorusPoint p) const override;
    void seams(std::vector<double>& out) const override;
    std::optional<std::pair<TorusPoint, double>> support() const override {
        return std::make_pair(TorusPoint{0, 0}, 0.96);
    }
    double max_speed() const override;
};

struct RotationBumpBlock : Block {
    TorusPoint center{};
    double rho = 0;    // rotation zone: rigid inside rho/2, supported in 3 rho/4
    double eta = 0;    // time window width, support in (anchor - eta, anchor)
    double anchor = 1.0;
    double angle = M_PI; // total rotation angle
    Kind kind() const override { return Kind::RotationBump; }
    Vec2 eval(double t, TorusPoint p) const override;
    void seams(std::vector<double>& out) const override;
    std::optional<std::pair<TorusPoint, double>> support() const override {
        return std::make_pair(center, 0.75 * rho);
    }
    double max_speed() const override;
    CutoffSpec cutoff() const { return {0.5 * rho, 0.75 * rho}; }
    double omega_profile(double t) const; // the time bump, integral = angle
};

struct RescaledBlock : Block {
    BlockPtr child;
    double eps = 1.0;
    TorusPoint center{};
    Kind kind() const override { return Kind::Rescaled; }
    Vec2 eval(double t, TorusPoint p) const override;
    void seams(std::vector<double>& out) const override { child->seams(out); }
    std::optional<std::pair<TorusPoint, double>> support() const override;
    double max_speed() const override { return eps * child->max_speed(); }
};

struct ConstantBlock : Block {
    Vec2 value{};
    Kind kind() const override { return Kind::Constant; }
    Vec2 eval(double, TorusPoint) const override { return value; }
    void seams(std::vector<double>&) const override {}
    double max_speed() const override { return value.norm(); }
};

struct TimeCompressedBlock : Block {
    std::shared_ptr<const FieldSpec> child;
    double gamma = 1.0; // activity squeezed into [0, gamma)
    Kind kind() const override { return Kind::TimeCompressed; }
    Vec2 eval(double t, TorusPoint p) const override;
    void seams(std::vector<double>& out) const override;
    double max_speed() const override { return child->max_speed() / gamma; }
};

struct FrozenTubeBlock : Block {
    std::shared_ptr<const FieldSpec> base;
    std::shared_ptr<const OrbitPath> orbit; // period N orbit of the base field
    int period_n = 1;
    double radius = 0; // tube radius r; field frozen inside r/2
    Kind kind() const override { return Kind::FrozenTube; }
    // evaluates the full frozen field u (not a correction)
    Vec2 eval(double t, TorusPoint p) const override;
    void seams(std::vector<double>& out) const override;
    double max_speed() const override { return base->max_speed(); }
};

struct OrbitInsertedBlock : Block {
    std::shared_ptr<const FieldSpec> carrier; // frozen field u
    std::shared_ptr<const FieldSpec> insert;  // block field h, support in B_{r/4}(0)
    std::shared_ptr<const OrbitPath> orbit;
    int period_n = 1;
    double radius = 0;
    Kind kind() const override { return Kind::OrbitInserted; }
    Vec2 eval(double t, TorusPoint p) const override;
    void seams(std::vector<double>& out) const override;
    double max_speed() const override;
};

// ---------------------------------------------------------------------------
// builders (certifier-gated builders live with the entropy tools)
// ---------------------------------------------------------------------------

// horseshoe transport field without the certification gate
FieldSpec build_horseshoe_field_raw(int symbols, double eps,
                                    const HorseshoeTuning& tuning = {});

FieldSpec build_rotation_bump(TorusPoint center, double rho, double eta,
                              double time_anchor = 1.0, double angle = M_PI);

FieldSpec build_constant_field(Vec2 v);

FieldSpec time_compress(const FieldSpec& b, double gamma);

// u = b frozen on tubes of radius r around the period-n orbit
FieldSpec freeze_tube(const FieldSpec& b, std::shared_ptr<const OrbitPath> orbit,
                      int period_n, double r);

// v = u + (1/N) h((t+i)/N, y - X_{t+i}(0)) on the tubes
FieldSpec insert_horseshoe_along_orbit(const FieldSpec& u, const FieldSpec& h,
                                       std::shared_ptr<const OrbitPath> orbit,
                                       int period_n, double r);

// ---------------------------------------------------------------------------
// estimation
// ---------------------------------------------------------------------------

struct SamplingSpec {
    int time_samples = 48;
    int space_samples = 64;     // per axis over the cell
    bool support_adapted = false; // refine inside block supports
};

enum class NormMode { TimeIntegral, TimeSup }; // L1_per c_w vs C0([0,1]; c_w)

struct NormEstimate {
    double value = 0;        // integral or sup of per-slice norms
    double sup_part = 0;     // contribution of sup norms
    double seminorm_part = 0;
    SamplingSpec grid;
    NormMode mode = NormMode::TimeIntegral;
};

NormEstimate field_norm_estimate(const FieldSpec& b, const Modulus& m,
                                 const SamplingSpec& grid = {},
                                 NormMode mode = NormMode::TimeIntegral);

// Lemma-4.2 style scale/interval selection
OscillationProfile good_scale_bad_interval(const FieldSpec& b, const Modulus& m,
                                           double eps, int time_samples = 64,
                                           int space_samples = 64);

// finite-difference divergence, for tests and validation
double divergence_fd(const FieldSpec& b, double t, TorusPoint p, double h = 1e-5);

} // namespace osf

#endif
