#ifndef OSF_ENTROPY_HPP
#define OSF_ENTROPY_HPP

#include <string>
#include <vector>

#include "osf/field.hpp"
#include "osf/flow.hpp"
#include "osf/torus.hpp"

namespace osf {

// geometric frame of the pseudo-horseshoe conditions, possibly rescaled and
// translated: world = center + scale * frame coordinates
struct HorseshoeFrame {
    int N = 2;
    double scale = 1.0;
    TorusPoint center{0, 0};

    double segment_x(int i) const { return -0.25 + i / (2.0 * N); } // E_i
    Box square() const { return {-0.25, 0.25, -0.25, 0.25, false}; }
    Box strip() const { return {-0.5, 0.5, -0.25, 0.25, true}; }
    Box d_plus() const { return {1.0 / 3.0, 0.5, -0.25, 0.25, true}; }
    Box d_minus() const { return {-0.5, -1.0 / 3.0, -0.25, 0.25, true}; }

    TorusPoint to_world(TorusPoint f) const {
        return wrap(center.x + scale * f.x, center.y + scale * f.y);
    }
    TorusPoint to_frame(TorusPoint wpt) const {
        Vec2 d = wrap_delta(center, wpt);
        return {d.x / scale, d.y / scale};
    }
};

struct HorseshoeCertificate {
    int N = 0;
    bool pass = false;
    double margin = 0;            // frame units; sampled clearance
    double entropy_lower_bound = 0; // ln N when pass
    int square_samples = 0;
    int segment_samples = 0;      // per segment
    double scale = 1.0;
    TorusPoint center{};
    double worst_square_clearance = 0;
    double worst_segment_clearance = 0;
};

// samples the square and each E_i; pass iff every image satisfies the
// strip/box conditions with positive clearance (measured in frame units)
HorseshoeCertificate certify_pseudo_horseshoe(const MapOracle& T,
                                              const HorseshoeFrame& frame,
                                              int segment_samples = 1000,
                                              int square_grid = 32,
                                              int threads = 0);

struct SymbolicItinerary {
    std::vector<int> word;
    std::vector<TorusPoint> witness; // polyline in frame coordinates
    bool realized = false;
};

struct CylinderCount {
    int depth = 0;
    long realized = 0;
    long total = 0; // N^depth
    std::vector<SymbolicItinerary> witnesses; // one per realized word
    double growth_rate = 0; // ln(realized)/depth
};

// curve-tracking enumeration of depth-k cylinders
CylinderCount count_cylinders(const MapOracle& T, const HorseshoeFrame& frame,
                              int depth, int max_segments = 1 << 20,
                              int threads = 0, bool keep_witnesses = false);

// greedy maximal (n, eps)-separated set in the Bowen metric on sampled region
double bowen_entropy_estimate(const MapOracle& T, const Box& region, int n,
                              double eps, int samples, int threads = 0);

double combine_invariant_pieces(const std::vector<double>& bounds);
double entropy_of_iterate(double h_of_tn, int n);
double shift_entropy(int n);

// certifier-gated builders
struct GatedHorseshoe {
    FieldSpec field;
    HorseshoeCertificate certificate;
};

GatedHorseshoe build_horseshoe_block(int symbols, double eps,
                                     const HorseshoeTuning& tuning = {},
                                     int gate_segment_samples = 220,
                                     int gate_square_grid = 18,
                                     const IntegratorConfig& cfg = {});

struct InfiniteEntropyField {
    FieldSpec field;
    std::vector<HorseshoeCertificate> block_certificates;
    std::vector<TorusPoint> centers;
    std::vector<double> scales;
    double tail_bound = 0; // sum over truncated indices of 1/N^2
};

InfiniteEntropyField build_infinite_entropy_field(int n_max,
                                                  const IntegratorConfig& cfg = {});

} // namespace osf

#endif
