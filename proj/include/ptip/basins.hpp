#pragma once

// Allee thresholds as stable manifolds of the threshold saddle, basin
// membership, basin-instability classification and the G-strip partition.

#include <cstddef>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "ptip/cycles.hpp"
#include "ptip/models.hpp"

namespace ptip {

struct ThresholdOptions {
    double seed_offset = 1e-6;     // scaled distance of the seeds from the saddle
    double spacing = 2e-3;         // scaled vertex spacing of the polyline
    double max_time = 4000.0;      // yr of backward integration per branch
    /// Box [0, box_N] x [0, box_P]; non-positive entries mean 1.2 r/c and 20 P3.
    double box_N = 0.0;
    double box_P = 0.0;
    IntegratorConfig integrator{};
};

enum class Membership { Inside, Outside, Indeterminate };

const char* to_string(Membership m);

/// Polyline approximation of the Allee threshold with a chunked bounding-box
/// index for distance and crossing queries. All geometry is in the scaled
/// plane (N, 1e3 P).
class BasinBoundary {
public:
    BasinBoundary(Model model, State saddle, State anchor, std::vector<State> polyline,
                  State box_hi);

    const Model& model() const { return model_; }
    double r() const { return r_of(model_); }
    const State& saddle() const { return saddle_; }
    /// e3 at the same parameters; the reference point for parity tests.
    const State& anchor() const { return anchor_; }
    const std::vector<State>& polyline() const { return poly_; }
    const State& box_hi() const { return box_hi_; }

    bool in_box(const State& x) const;
    /// Unsigned scaled distance to the polyline.
    double distance(const State& x) const;
    /// Number of polyline segments properly crossed by the segment a-b.
    std::size_t crossings(const State& a, const State& b) const;
    /// Scaled distance, positive on the anchor's side. Only meaningful inside
    /// the box and off the axes.
    double signed_distance(const State& x) const;

private:
    struct Chunk {
        std::size_t begin, end;  // segment indices [begin, end)
        double lo_x, lo_y, hi_x, hi_y;
    };

    Model model_;
    State saddle_;
    State anchor_;
    std::vector<State> poly_;
    std::vector<State> scaled_;
    State box_hi_;
    std::vector<Chunk> chunks_;
};

/// Backward integration of the saddle's stable manifold until it leaves the
/// box or reaches an axis. RMA keeps the P > 0 branch from e2; May keeps both
/// branches of e4, ordered from the lower end (near e2) to the upper end.
/// Throws NotBistable without a threshold saddle and ManifoldFailure if a
/// branch neither leaves the box nor terminates.
BasinBoundary allee_threshold(const Model& m, const ThresholdOptions& opts = {});

/// Geometric membership: Indeterminate inside the band around the polyline or
/// outside the box, Outside on an axis, otherwise parity of crossings on the
/// segment to the anchor.
Membership in_basin(const State& x, const BasinBoundary& boundary, double band = 1e-3);

/// Oracle membership by integration of the frozen system.
Membership in_basin_oracle(const State& x, const Model& m, const IntegratorConfig& cfg = {});

/// Geometric test with the oracle as fallback for indeterminate points.
bool in_basin_resolved(const State& x, const BasinBoundary& boundary, double band = 1e-3);

enum class BasinClass { Stable, Marginal, Partial, AlmostTotal, Total };

const char* to_string(BasinClass c);

struct ClassifyOptions {
    double band = 1e-3;               // samples closer than this are indeterminate
    double max_indeterminate = 0.01;  // fraction of samples tolerated in the band
    double tangency_tol = 1e-4;       // |extremal signed distance| for a tangency
    double marginal_fraction = 0.02;  // outside (inside) fraction for Marginal (AlmostTotal)
};

struct CrossingPoint {
    double t = 0.0;       // time along the cycle from samples[0]
    State x{};
    double phi = 0.0;     // phase about the cycle's anchor
    bool exiting = true;  // true when the cycle leaves the basin here
};

struct BasinClassification {
    BasinClass cls = BasinClass::Stable;
    double d_min = 0.0;  // minimum signed distance over the cycle
    double d_max = 0.0;
    double t_min = 0.0;  // where the minimum is attained
    double outside_fraction = 0.0;
    std::size_t indeterminate = 0;
    std::vector<CrossingPoint> crossings;
};

/// Position of Gamma(p1) relative to the basin bounded by theta(p2).
BasinClassification classify_basin_instability(const LimitCycle& cycle,
                                               const BasinBoundary& boundary,
                                               const ClassifyOptions& opts = {});

/// Minimum signed distance of the cycle to the boundary, refined between
/// samples.
double min_signed_distance(const LimitCycle& cycle, const BasinBoundary& boundary,
                           double* t_at = nullptr);

/// Counter-clockwise arc [lo, lo + width] of phases.
struct PhaseInterval {
    double lo = 0.0;
    double width = 0.0;
    bool empty = true;

    double hi() const { return wrap_phase(lo + width); }
    bool contains(double phi) const;
};

/// Phases of the arc of Gamma(r1) outside the basin bounded by theta(r2).
PhaseInterval unstable_phase_interval(const LimitCycle& cycle, const BasinBoundary& boundary,
                                      const ClassifyOptions& opts = {});

/// Threshold computed with a box large enough to contain the cycle.
BasinBoundary threshold_covering(const Model& m, const LimitCycle& cycle,
                                 ThresholdOptions opts = {});

/// Bisection on the sign of the minimum signed distance between Gamma(r1) and
/// theta(r2) over r2 in [lo, hi]. Throws BracketError without a sign change.
double marginal_r2(const LimitCycle& cycle, double lo, double hi, double tol = 1e-4,
                   const ThresholdOptions& topts = {});

struct GridSpec {
    double r_min = 0.0, r_max = 0.0;
    std::size_t r_count = 0;
    double s_min = 0.0, s_max = 0.0;  // second parameter (delta or q)
    std::size_t s_count = 0;

    double r_at(std::size_t i) const;
    double s_at(std::size_t j) const;
    void validate() const;
};

struct BiRegionCell {
    double r = 0.0;
    double s = 0.0;
    std::optional<BasinClass> cls;  // empty: not applicable
    std::string reason;
    double d_min = 0.0;
    double phi_minus = 0.0;
    double phi_plus = 0.0;
};

struct BiRegionMap {
    double r1 = 0.0;
    double s1 = 0.0;
    GridSpec grid;
    std::vector<BiRegionCell> cells;  // r fastest
};

BiRegionMap bi_region_map(const Model& tmpl, double r1, double s1, const GridSpec& grid,
                          const CycleOptions& copts = {}, const ClassifyOptions& opts = {});

struct GStripPartition {
    double r2 = 0.0;
    double r1 = 0.0;
    std::vector<State> points;  // every sample of every member cycle
    std::vector<double> r;      // member r per point
    std::vector<bool> unstable; // outside B(Gamma, r2)
    std::shared_ptr<const BasinBoundary> boundary;  // theta(r2)

    std::size_t unstable_count() const;
    /// Scaled distance from x to the nearest point of G.
    double distance_to_strip(const State& x) const;
    /// Whether a state on or near G falls in its basin-unstable part, judged
    /// by the state's own position relative to theta(r2).
    bool unstable_at(const State& x) const;
};

/// theta at the family's lowest r in a box covering every member cycle and
/// the carrying capacity at its highest r.
BasinBoundary family_threshold(const CycleFamily& family, ThresholdOptions opts = {});

GStripPartition g_strip_partition(const CycleFamily& family, const BasinBoundary& boundary);

}  // namespace ptip
