#pragma once

// Monte Carlo tipping experiments on the switched system: per-switch basin
// tests, tipping time and phase, B/P classification and rescue counting.

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "ptip/basins.hpp"
#include "ptip/climate.hpp"
#include "ptip/models.hpp"

namespace ptip {

struct ExperimentConfig {
    Model model = RmaParams{};
    ClimateConfig climate{};
    State x0{3.0, 0.002};
    std::size_t n_runs = 1000;
    /// Dangerous bifurcation level. When empty and `detect_r_h` is set it is
    /// located by bisection if the cycle is absent at climate.r_high.
    std::optional<double> r_h;
    bool detect_r_h = true;
    IntegratorConfig integrator{};
    double cache_step = 0.002;     // r spacing of cached thresholds
    double band = 1e-3;            // indeterminate band around thresholds
    double converged_tol = 1e-2;   // scaled distance to Gamma(r_pre)
    std::size_t phase_bins = 64;
    double time_bin = 1.0;         // yr

    void validate() const;
};

enum class TipKind { B, P };

const char* to_string(TipKind k);

struct TippingRecord {
    std::size_t run = 0;
    double t1 = 0.0;  // switch time after which the basin is never re-entered
    double r_pre = 0.0;
    double r_post = 0.0;
    State x_b{};
    double phi_xb = 0.0;  // phase about e3(r_pre)
    TipKind kind = TipKind::P;
    int rescues = 0;
    bool converged_pre = false;
    double distance_pre = 0.0;  // scaled distance of x_b to Gamma(r_pre)
};

enum class RunOutcome {
    Tipped,
    NoTip,          // horizon reached first
    InitialTip,     // x0 was outside the basin of the first epoch and never re-entered
    Unattributed,   // converged to extinction without a recorded basin exit
    Failed,
};

const char* to_string(RunOutcome o);

struct TimeSample {
    double t = 0.0;
    double r = 0.0;
    State x{};
};

struct RunResult {
    std::size_t run = 0;
    RunOutcome outcome = RunOutcome::NoTip;
    std::optional<TippingRecord> record;
    int rescues = 0;
    double t_end = 0.0;
    std::string error;
};

/// Shared read-only state: r_h and thresholds cached on an r grid.
class TippingContext {
public:
    explicit TippingContext(const ExperimentConfig& cfg);

    const ExperimentConfig& config() const { return cfg_; }
    std::optional<double> r_h() const { return r_h_; }
    /// Membership of x in the cycle basin at r: Outside above r_h, otherwise
    /// the two bracketing cached thresholds must agree, with the oracle at r
    /// deciding disagreements and band points.
    Membership member(const State& x, double r) const;
    std::size_t cached_thresholds() const;
    const State& extinction() const { return e0_; }

private:
    ExperimentConfig cfg_;
    std::optional<double> r_h_;
    double grid0_ = 0.0;
    std::vector<std::optional<BasinBoundary>> bounds_;
    State e0_{};
};

/// r_h per the config: given, detected, or absent when the cycle exists at
/// climate.r_high. Throws ClassificationUndefined when detection is disabled
/// and the interval straddles a cycle disappearance.
std::optional<double> resolve_r_h(const ExperimentConfig& cfg);

/// B iff r_post > r_h; P when r_h is absent.
TipKind classify_event(const TippingRecord& rec, std::optional<double> r_h);

/// One run driven by the run's own stream of the climate generator.
RunResult run_single_experiment(const TippingContext& ctx, std::size_t run,
                                std::vector<TimeSample>* series = nullptr,
                                double sample_dt = 0.1);

/// One run driven by a given signal.
RunResult run_with_signal(const TippingContext& ctx, const ClimateSignal& signal, std::size_t run,
                          std::vector<TimeSample>* series = nullptr, double sample_dt = 0.1);

/// Fill converged_pre and distance_pre from an exactly computed Gamma(r_pre).
void assess_convergence(const ExperimentConfig& cfg, TippingRecord& rec);

struct HistogramBundle {
    std::vector<double> phase_edges;  // bins + 1 edges over [0, 2 pi]
    std::vector<std::size_t> phase_B;
    std::vector<std::size_t> phase_P;
    std::vector<double> time_edges;
    std::vector<std::size_t> time_counts;
};

HistogramBundle make_histograms(const std::vector<TippingRecord>& records, std::size_t phase_bins,
                                double time_bin);

struct MonteCarloResult {
    std::optional<double> r_h;
    std::vector<RunResult> runs;
    std::vector<TippingRecord> records;  // tipped runs in run order
    HistogramBundle histograms;

    std::size_t count(RunOutcome o) const;
};

MonteCarloResult run_monte_carlo(const ExperimentConfig& cfg);
MonteCarloResult run_monte_carlo(const TippingContext& ctx);

/// Invariant-measure phase histogram mixed over r bins of width r_bin from
/// climate.r_low, weighted by the r_pre of the records and normalized to sum 1.
/// Bins whose centre has no cycle fall back to the smallest r_pre in the bin.
std::vector<double> mixture_measure_histogram(const ExperimentConfig& cfg,
                                              const std::vector<TippingRecord>& records,
                                              std::size_t bins, std::size_t J = 2000,
                                              double T = 100.0, double eps = 0.1,
                                              double r_bin = 0.05);

/// Pearson correlation of two equally sized samples.
double pearson(const std::vector<double>& a, const std::vector<double>& b);

/// Largest circular gap between recorded phases (2 pi when empty).
double largest_phase_gap(std::vector<double> phases);

}  // namespace ptip
