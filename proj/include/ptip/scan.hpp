#pragma once

// One-parameter branch scans, Hopf and cycle-disappearance bisection, and
// two-parameter attractor census maps.

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "ptip/basins.hpp"
#include "ptip/cycles.hpp"
#include "ptip/models.hpp"

namespace ptip {

struct ScanPoint {
    double r = 0.0;
    EquilibriumSet equilibria;
    std::optional<std::pair<State, State>> envelope;  // cycle min / max
    double period = 0.0;
    std::string error;  // why no cycle was recorded, if any
};

struct OneParamScan {
    std::vector<ScanPoint> points;
};

OneParamScan one_param_scan(const Model& tmpl, double r_min, double r_max, double step,
                            const CycleOptions& copts = {});

enum class BifurcationKind { Hopf, CycleDisappearance };

const char* to_string(BifurcationKind k);

struct BifurcationPoint {
    BifurcationKind kind = BifurcationKind::Hopf;
    double value = 0.0;
    double lo = 0.0;
    double hi = 0.0;

    double width() const { return hi - lo; }
};

/// Real part of the leading eigenvalue at e3.
double e3_real_part(const Model& m);

/// Bisection on Re(lambda(e3)) to the given bracket width; continues until
/// |Re| < 1e-6. Throws BracketError without a sign change or if the
/// eigenvalues at the root are real.
BifurcationPoint detect_hopf(const Model& tmpl, double lo, double hi, double tol = 1e-4);

bool cycle_exists(const Model& m, const CycleOptions& copts = {});

/// Bisection on the predicate "a cycle is found" (true at lo, false at hi).
/// A coarse pre-scan of `probes` interior points throws AmbiguousBracket if
/// the predicate is not monotone.
BifurcationPoint detect_cycle_disappearance(const Model& tmpl, double lo, double hi,
                                            double tol = 1e-3, const CycleOptions& copts = {},
                                            std::size_t probes = 8);

enum class RegionLabel {
    OscCoexistOrExtinction,
    StatCoexistOrExtinction,
    PreyOnlyOrExtinction,
    ExtinctionOnly,
    Ambiguous,
};

const char* to_string(RegionLabel l);

/// Probe initial conditions: e3 + 0.05 along N, near e1, near the N axis,
/// and (3, 0.002). Positions are scaled by (1 + jitter) per coordinate.
std::vector<State> census_probes(const Model& m, double jitter_N = 0.0, double jitter_P = 0.0);

struct CensusResult {
    RegionLabel label = RegionLabel::Ambiguous;
    std::vector<std::string> attractors;  // per probe
};

CensusResult attractor_census(const Model& m, const std::vector<State>& probes,
                              const IntegratorConfig& cfg = {});

struct RegionCell {
    double r = 0.0;
    double s = 0.0;
    RegionLabel label = RegionLabel::Ambiguous;
    std::string attractors;  // distinct attractors joined by '+'
};

struct RegionMap {
    GridSpec grid;
    std::vector<RegionCell> cells;  // r fastest
};

/// Census over the grid. `jitter_seed` != 0 perturbs each probe by up to 1%.
RegionMap two_param_region_map(const Model& tmpl, const GridSpec& grid,
                               const IntegratorConfig& cfg = {}, unsigned jitter_seed = 0);

}  // namespace ptip
