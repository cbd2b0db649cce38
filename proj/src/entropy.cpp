#include "osf/entropy.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <mutex>

namespace osf {

// ---------------------------------------------------------------------------
// arithmetic identities
// ---------------------------------------------------------------------------

double combine_invariant_pieces(const std::vector<double>& bounds) {
    if (bounds.empty()) throw EmptyList("combine_invariant_pieces: empty list");
    return *std::max_element(bounds.begin(), bounds.end());
}

double entropy_of_iterate(double h_of_tn, int n) {
    if (n < 1) throw DomainError("entropy_of_iterate: n must be >= 1");
    return h_of_tn / n;
}

double shift_entropy(int n) {
    if (n < 1) throw DomainError("shift_entropy: n must be >= 1");
    return std::log((double)n);
}

// ---------------------------------------------------------------------------
// certification
// ---------------------------------------------------------------------------

namespace {

// clearance of a frame point to the complement of the open strip
double strip_clearance(TorusPoint f) {
    return std::min(0.5 - std::fabs(f.x), 0.25 - std::fabs(f.y));
}

// clearance to the complement of D_{sign}
double box_clearance_frame(TorusPoint f, int sign) {
    double cx = sign > 0 ? std::min(f.x - 1.0 / 3.0, 0.5 - f.x)
                         : std::min(-1.0 / 3.0 - f.x, f.x + 0.5);
    return std::min(cx, 0.25 - std::fabs(f.y));
}

} // namespace

HorseshoeCertificate certify_pseudo_horseshoe(const MapOracle& T,
                                              const HorseshoeFrame& frame,
                                              int segment_samples, int square_grid,
                                              int threads) {
    HorseshoeCertificate cert;
    cert.N = frame.N;
    cert.scale = frame.scale;
    cert.center = frame.center;
    cert.square_samples = square_grid * square_grid;
    cert.segment_samples = segment_samples;

    // square condition: T([-1/4,1/4]^2) inside the open strip
    std::vector<double> square_cl((size_t)square_grid * square_grid);
    std::atomic<bool> failed{false};
    std::string fail_where;
    std::mutex fail_mx;
    parallel_for(square_grid, threads, [&](int i) {
        for (int j = 0; j < square_grid; ++j) {
            double fx = -0.25 + 0.5 * i / (square_grid - 1.0);
            double fy = -0.25 + 0.5 * j / (square_grid - 1.0);
            TorusPoint wpt = frame.to_world({fx, fy});
            TorusPoint img;
            try {
                img = T(wpt);
            } catch (const std::exception& e) {
                std::lock_guard<std::mutex> lk(fail_mx);
                failed = true;
                fail_where = "square sample (" + std::to_string(fx) + "," +
                             std::to_string(fy) + "): " + e.what();
                return;
            }
            square_cl[(size_t)i * square_grid + j] = strip_clearance(frame.to_frame(img));
        }
    });
    if (failed) throw OracleFailure("certify: " + fail_where);

    // segment conditions: T(E_i) inside D_{(-1)^i}
    std::vector<double> seg_cl((size_t)(frame.N + 1) * segment_samples);
    parallel_for(frame.N + 1, threads, [&](int i) {
        int sign = (i % 2 == 0) ? +1 : -1;
        double fx = frame.segment_x(i);
        for (int k = 0; k < segment_samples; ++k) {
            double fy = -0.25 + 0.5 * k / (segment_samples - 1.0);
            TorusPoint wpt = frame.to_world({fx, fy});
            TorusPoint img;
            try {
                img = T(wpt);
            } catch (const std::exception& e) {
                std::lock_guard<std::mutex> lk(fail_mx);
                failed = true;
                fail_where = "segment E" + std::to_string(i) + " sample " +
                             std::to_string(fy) + ": " + e.what();
                return;
            }
            seg_cl[(size_t)i * segment_samples + k] =
                box_clearance_frame(frame.to_frame(img), sign);
        }
    });
    if (failed) throw OracleFailure("certify: " + fail_where);

    cert.worst_square_clearance = *std::min_element(square_cl.begin(), square_cl.end());
    cert.worst_segment_clearance = *std::min_element(seg_cl.begin(), seg_cl.end());
    cert.margin = std::min(cert.worst_square_clearance, cert.worst_segment_clearance);
    cert.pass = cert.margin > 0.0;
    cert.entropy_lower_bound = cert.pass ? std::log((double)frame.N) : 0.0;
    return cert;
}

// ---------------------------------------------------------------------------
// cylinder counting via curve tracking
// ---------------------------------------------------------------------------

namespace {

struct Arc {
    std::vector<TorusPoint> pts; // frame coordinates
    std::vector<TorusPoint> src; // preimages of pts under T (frame coords)
};

constexpr double kTol = 1e-9;

bool in_square(TorusPoint f, double tol = kTol) {
    return std::fabs(f.x) <= 0.25 + tol && std::fabs(f.y) <= 0.25 + tol;
}

// restrict a square-crossing arc to the slab x in [xa, xb]: the sub-arc from
// the last crossing of xa before the first subsequent crossing of xb
bool restrict_to_slab(const Arc& arc, double xa, double xb, Arc& out) {
    const auto& P = arc.pts;
    int n = (int)P.size();
    int first_b = -1;
    // first index pair crossing xb after having touched xa
    bool seen_a = P[0].x <= xa + kTol;
    int last_a_edge = seen_a ? 0 : -1;
    double last_a_t = 0.0;
    for (int e = 0; e + 1 < n; ++e) {
        double x0 = P[e].x, x1 = P[e + 1].x;
        // crossing of xa
        if ((x0 - xa) * (x1 - xa) <= 0 && x0 != x1) {
            last_a_edge = e;
            last_a_t = (xa - x0) / (x1 - x0);
            last_a_t = std::clamp(last_a_t, 0.0, 1.0);
            seen_a = true;
        }
        if (seen_a && (x0 - xb) * (x1 - xb) <= 0 && x0 != x1) {
            double tb = std::clamp((xb - x0) / (x1 - x0), 0.0, 1.0);
            // require the b-crossing not to precede the a-crossing on one edge
            if (e > last_a_edge || (e == last_a_edge && tb >= last_a_t)) {
                first_b = e;
                // build the sub-arc
                auto lerp_p = [&](int edge, double t) {
                    Vec2 a = as_vec(P[edge]), b = as_vec(P[edge + 1]);
                    Vec2 sa = as_vec(arc.src[edge]), sb = as_vec(arc.src[edge + 1]);
                    return std::make_pair(TorusPoint{a.x + t * (b.x - a.x),
                                                     a.y + t * (b.y - a.y)},
                                          TorusPoint{sa.x + t * (sb.x - sa.x),
                                                     sa.y + t * (sb.y - sa.y)});
                };
                out.pts.clear();
                out.src.clear();
                auto [p0, s0] = lerp_p(last_a_edge, last_a_t);
                out.pts.push_back(p0);
                out.src.push_back(s0);
                for (int k = last_a_edge + 1; k <= e; ++k) {
                    out.pts.push_back(P[k]);
                    out.src.push_back(arc.src[k]);
                }
                auto [p1, s1] = lerp_p(e, tb);
                out.pts.push_back(p1);
                out.src.push_back(s1);
                return true;
            }
        }
    }
    (void)first_b;
    return false;
}

// map an arc through T with adaptive refinement; source points are kept
struct FrameMap {
    const MapOracle& T;
    const HorseshoeFrame& frame;
    TorusPoint operator()(TorusPoint f) const {
        return frame.to_frame(T(frame.to_world(f)));
    }
};

bool map_and_refine(const FrameMap& fm, const Arc& src_arc, double limit,
                    int max_segments, Arc& out) {
    const auto& S = src_arc.pts;
    out.pts.clear();
    out.src.clear();
    if (S.size() < 2) return false;
    out.pts.reserve(S.size() * 2);
    // depth-first refinement between consecutive source points
    std::vector<TorusPoint> stack_src;
    std::vector<TorusPoint> stack_img;
    TorusPoint cur_s = S[0];
    TorusPoint cur_i = fm(cur_s);
    out.pts.push_back(cur_i);
    out.src.push_back(cur_s);
    for (size_t k = 1; k < S.size(); ++k) {
        stack_src.push_back(S[k]);
        stack_img.push_back(fm(S[k]));
        while (!stack_src.empty()) {
            TorusPoint ns = stack_src.back();
            TorusPoint ni = stack_img.back();
            Vec2 d = wrap_delta(cur_i, ni);
            double src_gap = geodesic_distance(cur_s, ns);
            if (d.norm() <= limit || src_gap < 1e-12) {
                stack_src.pop_back();
                stack_img.pop_back();
                out.pts.push_back(ni);
                out.src.push_back(ns);
                cur_s = ns;
                cur_i = ni;
            } else {
                if ((int)(out.pts.size() + stack_src.size()) >= max_segments)
                    return false; // refinement exhausted
                TorusPoint mid{0.5 * (cur_s.x + ns.x), 0.5 * (cur_s.y + ns.y)};
                stack_src.push_back(mid);
                stack_img.push_back(fm(mid));
            }
        }
    }
    return true;
}

// extract the E_0 -> E_N crossing sub-arc of an image polyline
bool extract_crossing(const Arc& img, Arc& out) {
    const auto& P = img.pts;
    int n = (int)P.size();
    struct Event {
        int edge;
        double t;
        int line; // 0: x=-1/4, 1: x=+1/4
    };
    std::vector<Event> events;
    for (int e = 0; e + 1 < n; ++e) {
        double x0 = P[e].x, x1 = P[e + 1].x;
        for (int line = 0; line < 2; ++line) {
            double xc = line == 0 ? -0.25 : 0.25;
            if ((x0 - xc) * (x1 - xc) <= 0 && x0 != x1) {
                double t = std::clamp((xc - x0) / (x1 - x0), 0.0, 1.0);
                double y = P[e].y + t * (P[e + 1].y - P[e].y);
                if (std::fabs(y) <= 0.25 + kTol) events.push_back({e, t, line});
            }
        }
    }
    auto before = [](const Event& a, const Event& b) {
        return a.edge < b.edge || (a.edge == b.edge && a.t < b.t);
    };
    std::sort(events.begin(), events.end(), before);
    for (size_t i = 0; i + 1 < events.size(); ++i) {
        const Event& a = events[i];
        const Event& b = events[i + 1];
        if (a.line == b.line) continue;
        // interior must stay inside the square
        bool ok = true;
        auto lerp = [&](const Event& ev) {
            Vec2 p0 = as_vec(P[ev.edge]), p1 = as_vec(P[ev.edge + 1]);
            Vec2 s0 = as_vec(img.src[ev.edge]), s1 = as_vec(img.src[ev.edge + 1]);
            return std::make_pair(
                TorusPoint{p0.x + ev.t * (p1.x - p0.x), p0.y + ev.t * (p1.y - p0.y)},
                TorusPoint{s0.x + ev.t * (s1.x - s0.x), s0.y + ev.t * (s1.y - s0.y)});
        };
        for (int k = a.edge + 1; k <= b.edge; ++k) {
            if (!in_square(P[k], 5e-7)) {
                ok = false;
                break;
            }
        }
        if (!ok) continue;
        out.pts.clear();
        out.src.clear();
        auto [pa, sa] = lerp(a);
        out.pts.push_back(pa);
        out.src.push_back(sa);
        for (int k = a.edge + 1; k <= b.edge; ++k) {
            out.pts.push_back(P[k]);
            out.src.push_back(img.src[k]);
        }
        auto [pb, sb] = lerp(b);
        out.pts.push_back(pb);
        out.src.push_back(sb);
        if (a.line == 1) { // orient from E_0 to E_N
            std::reverse(out.pts.begin(), out.pts.end());
            std::reverse(out.src.begin(), out.src.end());
        }
        return true;
    }
    return false;
}

} // namespace

CylinderCount count_cylinders(const MapOracle& T, const HorseshoeFrame& frame,
                              int depth, int max_segments, int threads,
                              bool keep_witnesses) {
    if (depth < 1) throw DomainError("count_cylinders: depth must be >= 1");
    CylinderCount out;
    out.depth = depth;
    out.total = 1;
    for (int k = 0; k < depth; ++k) out.total *= frame.N;

    FrameMap fm{T, frame};
    double limit = 1.0 / (8.0 * frame.N);

    struct Node {
        Arc arc;
        std::vector<int> word;
        bool alive = true;
    };
    // root: the square midline
    Node root;
    {
        int n0 = 33;
        for (int k = 0; k < n0; ++k) {
            double x = -0.25 + 0.5 * k / (n0 - 1.0);
            root.arc.pts.push_back({x, 0.0});
            root.arc.src.push_back({x, 0.0});
        }
        root.word = {};
    }
    std::vector<Node> level{root};
    for (int d = 0; d < depth; ++d) {
        std::vector<Node> next((size_t)level.size() * frame.N);
        std::atomic<long> created{0};
        parallel_for((int)level.size(), threads, [&](int li) {
            const Node& parent = level[li];
            for (int a = 0; a < frame.N; ++a) {
                Node& nd = next[(size_t)li * frame.N + a];
                nd.word = parent.word;
                nd.word.insert(nd.word.begin(), a);
                nd.alive = false;
                if (!parent.alive) continue;
                Arc slab;
                if (!restrict_to_slab(parent.arc, frame.segment_x(a),
                                      frame.segment_x(a + 1), slab))
                    continue;
                Arc image;
                if (!map_and_refine(fm, slab, limit, max_segments, image)) continue;
                Arc crossing;
                if (!extract_crossing(image, crossing)) continue;
                nd.arc = std::move(crossing);
                nd.alive = true;
                created.fetch_add(1);
            }
        });
        level = std::move(next);
    }
    long realized = 0;
    for (const Node& nd : level) {
        if (!nd.alive) continue;
        ++realized;
        if (keep_witnesses) {
            SymbolicItinerary it;
            it.word = nd.word;
            it.witness = nd.arc.pts;
            it.realized = true;
            out.witnesses.push_back(std::move(it));
        }
    }
    out.realized = realized;
    out.growth_rate = realized > 0 ? std::log((double)realized) / depth : 0.0;
    return out;
}

// ---------------------------------------------------------------------------
// Bowen estimate
// ---------------------------------------------------------------------------

double bowen_entropy_estimate(const MapOracle& T, const Box& region, int n,
                              double eps, int samples, int threads) {
    if (n < 1) throw DomainError("bowen: n must be >= 1");
    if (eps <= 0) throw DomainError("bowen: eps must be positive");
    int g = std::max(2, (int)std::ceil(std::sqrt((double)samples)));
    std::vector<std::vector<TorusPoint>> orbits((size_t)g * g);
    parallel_for(g, threads, [&](int i) {
        for (int j = 0; j < g; ++j) {
            TorusPoint p{region.x_min + (region.x_max - region.x_min) * (i + 0.5) / g,
                         region.y_min + (region.y_max - region.y_min) * (j + 0.5) / g};
            p = wrap(p.x, p.y);
            auto& orb = orbits[(size_t)i * g + j];
            orb.reserve(n);
            orb.push_back(p);
            for (int k = 1; k < n; ++k) orb.push_back(T(orb.back()));
        }
    });
    // greedy maximal separated set in fixed lexicographic order, counted at
    // window lengths 1 and n; the estimate is the packing growth rate, which
    // vanishes for isometries at any finite n
    auto packing = [&](int len) {
        std::vector<size_t> accepted;
        for (size_t c = 0; c < orbits.size(); ++c) {
            bool separated = true;
            for (size_t a : accepted) {
                double dmax = 0;
                for (int k = 0; k < len && dmax < eps; ++k)
                    dmax = std::max(dmax, geodesic_distance(orbits[c][k], orbits[a][k]));
                if (dmax < eps) {
                    separated = false;
                    break;
                }
            }
            if (separated) accepted.push_back(c);
        }
        return (double)accepted.size();
    };
    double cn = packing(n);
    if (n == 1) return std::log(cn);
    double c1 = packing(1);
    return (std::log(cn) - std::log(c1)) / (n - 1);
}

// ---------------------------------------------------------------------------
// gated builders
// ---------------------------------------------------------------------------

GatedHorseshoe build_horseshoe_block(int symbols, double eps, const HorseshoeTuning& tuning,
                                     int gate_segment_samples, int gate_square_grid,
                                     const IntegratorConfig& cfg) {
    GatedHorseshoe out;
    out.field = build_horseshoe_field_raw(symbols, eps, tuning);
    HorseshoeFrame frame{symbols, eps, TorusPoint{0, 0}};
    IntegratorConfig c = cfg;
    c.abs_tol = std::min(c.abs_tol, 1e-9 * eps);
    out.certificate = certify_pseudo_horseshoe(make_time_map(out.field, 1.0, c), frame,
                                               gate_segment_samples, gate_square_grid,
                                               c.threads);
    if (!out.certificate.pass)
        throw CertificationFailed("horseshoe block failed the certification gate (margin " +
                                  std::to_string(out.certificate.margin) + ")");
    return out;
}

InfiniteEntropyField build_infinite_entropy_field(int n_max, const IntegratorConfig& cfg) {
    if (n_max < 2 || n_max > 12)
        throw DomainError("truncation order must lie in [2, 12]");
    InfiniteEntropyField out;
    std::vector<BlockPtr> blocks;
    for (int n = 2; n <= n_max; ++n) {
        double eps = std::pow(2.0, -(n + 2));
        TorusPoint center{-0.5, -1.0 + std::pow(2.0, -(n - 1))};
        GatedHorseshoe g = build_horseshoe_block(n, eps, {}, 160, 14, cfg);
        // re-center the rescaled block at x_n
        auto rs = std::dynamic_pointer_cast<const RescaledBlock>(g.field.blocks().front());
        auto moved = std::make_shared<RescaledBlock>(*rs);
        moved->center = center;
        blocks.push_back(moved);
        HorseshoeCertificate cert = g.certificate;
        cert.center = center;
        out.block_certificates.push_back(cert);
        out.centers.push_back(center);
        out.scales.push_back(eps);
    }
    // supports pairwise disjoint
    for (size_t i = 0; i < out.centers.size(); ++i)
        for (size_t j = i + 1; j < out.centers.size(); ++j) {
            double d = geodesic_distance(out.centers[i], out.centers[j]);
            if (d <= out.scales[i] + out.scales[j])
                throw ValidationError("sub-block supports are not disjoint");
        }
    for (int n = n_max + 1; n <= 4096; ++n) out.tail_bound += 1.0 / ((double)n * n);
    out.field = FieldSpec(std::move(blocks));
    return out;
}

} // namespace osf
