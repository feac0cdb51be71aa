#pragma once

// Adaptive Dormand-Prince 5(4) integration of planar autonomous fields with
// 4th-order dense output, event localization and attractor classification.

#include <cstddef>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "ptip/state.hpp"

namespace ptip {

using VectorField = std::function<State(const State&)>;

struct IntegratorConfig {
    double rel_tol = 1e-8;
    double abs_tol_N = 1e-10;
    double abs_tol_P = 1e-13;
    double max_step = 0.5;     // yr
    double max_time = 2000.0;  // yr, horizon for open-ended integrations
    /// When positive the error control is disabled and every step has this
    /// size (used for convergence-order studies).
    double fixed_step = 0.0;

    /// Throws ConfigError naming the first non-positive field.
    void validate() const;
};

/// One accepted step's continuous extension, valid for t in [t0, t0 + h].
struct DenseSegment {
    double t0 = 0.0;
    double h = 0.0;
    State c[5];

    double t1() const { return t0 + h; }
    State eval(double t) const;
};

class Trajectory {
public:
    Trajectory() = default;
    Trajectory(double t0, State x0);

    void push(const DenseSegment& seg, double t, State x);
    /// Replace the last sample (used when a terminal event truncates a step).
    void truncate_last(double t, State x);

    const std::vector<double>& times() const { return times_; }
    const std::vector<State>& states() const { return states_; }
    std::size_t size() const { return times_.size(); }
    double t_begin() const { return times_.front(); }
    double t_end() const { return times_.back(); }
    State front() const { return states_.front(); }
    State back() const { return states_.back(); }

    /// Dense evaluation anywhere in [t_begin, t_end].
    State at(double t) const;

private:
    std::vector<double> times_;
    std::vector<State> states_;
    std::vector<DenseSegment> segments_;
};

/// Single-trajectory stepper. Negative components in (-1e-12, 0) are clamped
/// to zero; a step producing anything below that is rejected and retried with
/// a smaller step, and NumericalViolation is raised if that cannot succeed.
class Dopri5 {
public:
    Dopri5(VectorField field, IntegratorConfig cfg);

    void reset(double t, State x);

    /// Take one accepted step that does not pass t_stop.
    void step(double t_stop);

    double t() const { return t_; }
    State x() const { return x_; }
    const DenseSegment& segment() const { return seg_; }
    std::size_t accepted_steps() const { return accepted_; }
    std::size_t evaluations() const { return evals_; }

    static constexpr double kClampThreshold = 1e-12;

private:
    double initial_step();

    VectorField f_;
    IntegratorConfig cfg_;
    double t_ = 0.0;
    State x_{};
    State k1_{};
    double h_ = 0.0;
    bool have_h_ = false;
    DenseSegment seg_{};
    std::size_t accepted_ = 0;
    std::size_t evals_ = 0;
};

/// Integrate from t0 to t1 storing every accepted step.
Trajectory integrate(const VectorField& field, State x0, double t0, double t1,
                     const IntegratorConfig& cfg = {});

struct EventSpec {
    std::function<double(const State&)> g;
    /// +1 rising crossings only, -1 falling only, 0 both.
    int direction = 0;
    bool terminal = false;
};

struct EventHit {
    std::size_t event = 0;
    double t = 0.0;
    State x{};
};

struct EventResult {
    Trajectory trajectory;
    std::vector<EventHit> hits;
    bool terminated = false;
};

/// Integrate until t1 (default t0 + cfg.max_time) or the first terminal event.
/// Hits are localized on the dense output to a time bracket below 1e-8 yr.
EventResult integrate_with_events(const VectorField& field, State x0, double t0,
                                  const IntegratorConfig& cfg,
                                  const std::vector<EventSpec>& events,
                                  std::optional<double> t1 = std::nullopt);

/// Root of g along a dense segment between (ta, ga) and (tb, gb), ga*gb <= 0.
double locate_event(const DenseSegment& seg, const std::function<double(const State&)>& g,
                    double ta, double ga, double tb, double gb);

// ---------------------------------------------------------------------------
// Attractor convergence

struct LabeledPoint {
    std::string label;
    State x;
};

/// Poincare section {N = anchor.N, dN/dt > 0} used to recognize a cycle.
struct CycleWitness {
    State anchor;
};

struct AttractorCatalog {
    std::vector<LabeledPoint> equilibria;  // attracting equilibria only
    std::optional<CycleWitness> cycle;
    double tol_eq = 1e-3;     // scaled radius
    double dwell = 5.0;       // yr
    double tol_cycle = 1e-6;  // scaled change between section returns
    double min_cycle_amplitude = 1e-3;
};

enum class AttractorKind { Equilibrium, Cycle, Undecided };

struct AttractorLabel {
    AttractorKind kind = AttractorKind::Undecided;
    std::string name;  // equilibrium label, "cycle" or "undecided"
    double decided_at = 0.0;
};

/// Integrate until a catalog attractor's convergence criterion holds or
/// cfg.max_time elapses.
AttractorLabel converge_to_attractor(const VectorField& field, State x0,
                                     const IntegratorConfig& cfg,
                                     const AttractorCatalog& catalog);

}  // namespace ptip
