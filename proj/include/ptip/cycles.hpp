#pragma once

// Limit cycles of the frozen system, the polar phase around e3, invariant
// measures and cycle families along r-paths.

#include <cstddef>
#include <optional>
#include <utility>
#include <vector>

#include "ptip/models.hpp"
#include "ptip/ode.hpp"

namespace ptip {

inline constexpr double kTwoPi = 6.283185307179586476925286766559;

struct CycleOptions {
    double transient = 500.0;      // yr before returns are trusted
    double return_tol = 1e-6;      // scaled distance between section returns
    std::size_t samples = 512;
    double start_offset = 0.05;    // scaled offset from e3 along +N
    double min_amplitude = 1e-3;   // scaled; smaller limit sets count as e3
    IntegratorConfig integrator{};
};

struct LimitCycle {
    Model model;
    State anchor;   // e3 at the cycle's r
    double period = 0.0;
    /// Uniform in time over one period; samples[0] lies on the section
    /// {N = anchor.N, dN/dt > 0}.
    std::vector<State> samples;
    double closure_error = 0.0;  // scaled gap after integrating one period

    double r() const { return r_of(model); }
    double dt() const { return period / static_cast<double>(samples.size()); }
    /// State on the cycle at time t in [0, period), integrated from the
    /// nearest preceding sample.
    State point_at(double t) const;
    /// min/max of N and P over the samples.
    std::pair<State, State> envelope() const;
};

/// Locate the attracting cycle by forward integration from e3 (or `start`).
/// Throws NoCycleError if the orbit settles on an equilibrium or never
/// produces converged section returns.
LimitCycle find_limit_cycle(const Model& m, const CycleOptions& opts = {},
                            std::optional<State> start = std::nullopt);

/// Scaled distance from x to the cycle, refined between samples.
double distance_to_cycle(const LimitCycle& cycle, const State& x);

/// Counter-clockwise angle of (N - N3, 1e3 (P - P3)) in [0, 2 pi).
double phase_of(const State& point, const State& anchor);

/// Wrap any angle into [0, 2 pi).
double wrap_phase(double phi);

/// Closed-polygon winding number of the samples about `anchor`.
int winding_number(const std::vector<State>& closed_curve, const State& anchor);

/// Scaled arc length of the closed sample polygon.
double scaled_perimeter(const std::vector<State>& closed_curve);

struct InvariantMeasure {
    std::vector<double> endpoint_phases;  // one per initial condition
    double T = 0.0;
    double eps = 0.0;

    std::size_t J() const { return endpoint_phases.size(); }
    /// Endpoints with phase in the circular window [phi - eps, phi + eps].
    std::size_t count_within(double phi) const;
    /// K/J over the window of half-width eps around phi.
    double mass_at(double phi) const;
    /// Sliding-window curve at n equally spaced phases: (phi, mu).
    std::vector<std::pair<double, double>> curve(std::size_t n) const;
    /// Disjoint bins over [0, 2 pi), normalized to sum 1.
    std::vector<double> histogram(std::size_t bins) const;
    /// Counts over consecutive half-open windows of width 2 eps starting at 0;
    /// the last window is truncated at 2 pi.
    std::vector<std::size_t> partition_counts() const;
};

/// J initial conditions at equal scaled arc length around the cycle, each
/// integrated for T; the measure is the phase distribution of the endpoints.
/// `rotation` shifts the placement along the cycle by that fraction of the
/// arc spacing.
InvariantMeasure invariant_measure(const LimitCycle& cycle, std::size_t J = 10000,
                                   double T = 100.0, double eps = 0.1,
                                   const IntegratorConfig& cfg = {}, double rotation = 0.0);

/// J points equally spaced in scaled arc length along the cycle.
std::vector<State> arc_length_points(const LimitCycle& cycle, std::size_t J,
                                     double rotation = 0.0);

struct CycleFamily {
    double r2 = 0.0;
    double r1 = 0.0;
    double step = 0.0;
    std::vector<LimitCycle> cycles;  // ascending in r

    /// Every sample of every member: the set G.
    std::vector<State> union_samples() const;
};

double hausdorff_scaled(const std::vector<State>& a, const std::vector<State>& b);

/// Cycles on the grid r2, r2 + step, ..., r1. Throws PathInvalid naming the
/// first r without a cycle, or where adjacent members jump discontinuously.
CycleFamily cycle_family(const Model& tmpl, double r2, double r1, double step = 0.01,
                         const CycleOptions& opts = {});

}  // namespace ptip
