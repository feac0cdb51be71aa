#include "ptip/ode.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <boost/math/tools/toms748_solve.hpp>

#include "ptip/errors.hpp"

namespace ptip {

namespace {

// Dormand-Prince 5(4) tableau.
constexpr double c2 = 1.0 / 5.0, c3 = 3.0 / 10.0, c4 = 4.0 / 5.0, c5 = 8.0 / 9.0;
constexpr double a21 = 1.0 / 5.0;
constexpr double a31 = 3.0 / 40.0, a32 = 9.0 / 40.0;
constexpr double a41 = 44.0 / 45.0, a42 = -56.0 / 15.0, a43 = 32.0 / 9.0;
constexpr double a51 = 19372.0 / 6561.0, a52 = -25360.0 / 2187.0, a53 = 64448.0 / 6561.0,
                 a54 = -212.0 / 729.0;
constexpr double a61 = 9017.0 / 3168.0, a62 = -355.0 / 33.0, a63 = 46732.0 / 5247.0,
                 a64 = 49.0 / 176.0, a65 = -5103.0 / 18656.0;
constexpr double a71 = 35.0 / 384.0, a73 = 500.0 / 1113.0, a74 = 125.0 / 192.0,
                 a75 = -2187.0 / 6784.0, a76 = 11.0 / 84.0;
constexpr double e1 = 71.0 / 57600.0, e3 = -71.0 / 16695.0, e4 = 71.0 / 1920.0,
                 e5 = -17253.0 / 339200.0, e6 = 22.0 / 525.0, e7 = -1.0 / 40.0;
// Shampine's continuous extension.
constexpr double d1 = -12715105075.0 / 11282082432.0, d3 = 87487479700.0 / 32700410799.0,
                 d4 = -10690763975.0 / 1880347072.0, d5 = 701980252875.0 / 199316789632.0,
                 d6 = -1453857185.0 / 822651844.0, d7 = 69997945.0 / 29380423.0;

constexpr std::size_t kMaxSteps = 50'000'000;

double h_min(double t) { return std::max(1e-14, 1e-13 * std::abs(t)); }

}  // namespace

void IntegratorConfig::validate() const {
    auto need = [](double v, const char* key) {
        if (!(v > 0.0) || !std::isfinite(v))
            throw ConfigError(key, std::string("integrator.") + key + " must be > 0");
    };
    need(rel_tol, "rel_tol");
    need(abs_tol_N, "abs_tol_N");
    need(abs_tol_P, "abs_tol_P");
    need(max_step, "max_step");
    need(max_time, "max_time");
    if (fixed_step < 0.0) throw ConfigError("fixed_step", "integrator.fixed_step must be >= 0");
}

State DenseSegment::eval(double t) const {
    const double th = h == 0.0 ? 0.0 : (t - t0) / h;
    const double th1 = 1.0 - th;
    return c[0] + th * (c[1] + th1 * (c[2] + th * (c[3] + th1 * c[4])));
}

Trajectory::Trajectory(double t0, State x0) {
    times_.push_back(t0);
    states_.push_back(x0);
}

void Trajectory::push(const DenseSegment& seg, double t, State x) {
    segments_.push_back(seg);
    times_.push_back(t);
    states_.push_back(x);
}

void Trajectory::truncate_last(double t, State x) {
    times_.back() = t;
    states_.back() = x;
}

State Trajectory::at(double t) const {
    if (t < t_begin() || t > t_end())
        throw RangeError("trajectory evaluated outside [t_begin, t_end]");
    if (segments_.empty()) return states_.front();
    auto it = std::upper_bound(times_.begin(), times_.end(), t);
    std::size_t i = it == times_.begin() ? 0 : static_cast<std::size_t>(it - times_.begin()) - 1;
    if (i >= segments_.size()) return states_.back();
    if (t == times_[i]) return states_[i];
    return segments_[i].eval(t);
}

Dopri5::Dopri5(VectorField field, IntegratorConfig cfg) : f_(std::move(field)), cfg_(cfg) {
    cfg_.validate();
}

void Dopri5::reset(double t, State x) {
    if (!x.finite()) throw IntegrationError("non-finite initial state", t, x);
    if (x.N < -kClampThreshold || x.P < -kClampThreshold)
        throw NumericalViolation("negative initial state", t, x);
    x.N = std::max(x.N, 0.0);
    x.P = std::max(x.P, 0.0);
    t_ = t;
    x_ = x;
    k1_ = f_(x_);
    ++evals_;
    have_h_ = false;
}

double Dopri5::initial_step() {
    const double scN = cfg_.abs_tol_N + cfg_.rel_tol * std::abs(x_.N);
    const double scP = cfg_.abs_tol_P + cfg_.rel_tol * std::abs(x_.P);
    auto nrm = [&](State v) {
        return std::sqrt(0.5 * ((v.N / scN) * (v.N / scN) + (v.P / scP) * (v.P / scP)));
    };
    const double dn0 = nrm(x_);
    const double dn1 = nrm(k1_);
    double h0 = (dn0 < 1e-5 || dn1 < 1e-5) ? 1e-6 : 0.01 * dn0 / dn1;
    h0 = std::min(h0, cfg_.max_step);
    const State f1 = f_(x_ + h0 * k1_);
    ++evals_;
    const double dn2 = nrm(f1 - k1_) / h0;
    const double m = std::max(dn1, dn2);
    const double h1 = m <= 1e-15 ? std::max(1e-6, h0 * 1e-3) : std::pow(0.01 / m, 0.2);
    return std::min({100.0 * h0, h1, cfg_.max_step});
}

void Dopri5::step(double t_stop) {
    const bool fixed = cfg_.fixed_step > 0.0;
    if (!have_h_) {
        h_ = fixed ? cfg_.fixed_step : initial_step();
        have_h_ = true;
    }
    if (accepted_ >= kMaxSteps) throw IntegrationError("step budget exhausted", t_, x_);

    for (;;) {
        const double remaining = t_stop - t_;
        if (remaining <= 0.0) return;
        double h = std::min(fixed ? cfg_.fixed_step : std::min(h_, cfg_.max_step), remaining);
        const bool truncated = h == remaining;
        if (h < h_min(t_) && !truncated)
            throw IntegrationError("step size underflow", t_, x_);

        const State& k1 = k1_;
        const State k2 = f_(x_ + h * (a21 * k1));
        const State k3 = f_(x_ + h * (a31 * k1 + a32 * k2));
        const State k4 = f_(x_ + h * (a41 * k1 + a42 * k2 + a43 * k3));
        const State k5 = f_(x_ + h * (a51 * k1 + a52 * k2 + a53 * k3 + a54 * k4));
        const State k6 = f_(x_ + h * (a61 * k1 + a62 * k2 + a63 * k3 + a64 * k4 + a65 * k5));
        const State y1 = x_ + h * (a71 * k1 + a73 * k3 + a74 * k4 + a75 * k5 + a76 * k6);
        const State k7 = f_(y1);
        evals_ += 6;

        const State err = h * (e1 * k1 + e3 * k3 + e4 * k4 + e5 * k5 + e6 * k6 + e7 * k7);
        const double scN = cfg_.abs_tol_N + cfg_.rel_tol * std::max(std::abs(x_.N), std::abs(y1.N));
        const double scP = cfg_.abs_tol_P + cfg_.rel_tol * std::max(std::abs(x_.P), std::abs(y1.P));
        const double en = std::sqrt(
            0.5 * ((err.N / scN) * (err.N / scN) + (err.P / scP) * (err.P / scP)));

        if (!y1.finite() || !std::isfinite(en)) {
            if (fixed) throw IntegrationError("non-finite state", t_, x_);
            h_ = 0.25 * h;
            continue;
        }
        if (!fixed && en > 1.0) {
            h_ = h * std::max(0.2, 0.9 * std::pow(en, -0.2));
            continue;
        }
        if (y1.N < -kClampThreshold || y1.P < -kClampThreshold) {
            if (fixed || h * 0.5 < h_min(t_))
                throw NumericalViolation("population became negative", t_, x_);
            h_ = 0.5 * h;
            continue;
        }

        seg_.t0 = t_;
        seg_.h = h;
        const State ydiff = y1 - x_;
        const State bspl = h * k1 - ydiff;
        seg_.c[0] = x_;
        seg_.c[1] = ydiff;
        seg_.c[2] = bspl;
        seg_.c[3] = ydiff - h * k7 - bspl;
        seg_.c[4] = h * (d1 * k1 + d3 * k3 + d4 * k4 + d5 * k5 + d6 * k6 + d7 * k7);

        State y = y1;
        bool clamped = false;
        if (y.N < 0.0) { y.N = 0.0; clamped = true; }
        if (y.P < 0.0) { y.P = 0.0; clamped = true; }
        t_ = truncated ? t_stop : t_ + h;
        x_ = y;
        if (clamped) {
            k1_ = f_(x_);
            ++evals_;
        } else {
            k1_ = k7;
        }
        ++accepted_;
        if (!fixed) {
            const double fac = std::min(5.0, std::max(0.2, 0.9 * std::pow(std::max(en, 1e-10), -0.2)));
            const double next = h * fac;
            h_ = truncated ? std::max(h_, next) : next;
        }
        return;
    }
}

Trajectory integrate(const VectorField& field, State x0, double t0, double t1,
                     const IntegratorConfig& cfg) {
    if (!(t1 > t0)) throw PreconditionError("integrate requires t1 > t0");
    Dopri5 stepper(field, cfg);
    stepper.reset(t0, x0);
    Trajectory traj(t0, stepper.x());
    while (stepper.t() < t1) {
        stepper.step(t1);
        traj.push(stepper.segment(), stepper.t(), stepper.x());
    }
    return traj;
}

double locate_event(const DenseSegment& seg, const std::function<double(const State&)>& g,
                    double ta, double ga, double tb, double gb) {
    if (ga == 0.0) return ta;
    if (gb == 0.0) return tb;
    auto fn = [&](double t) { return g(seg.eval(t)); };
    auto tol = [](double a, double b) { return std::abs(b - a) <= 1e-12 * std::max(1.0, std::abs(a)); };
    std::uintmax_t iters = 200;
    auto [lo, hi] = boost::math::tools::toms748_solve(fn, ta, tb, ga, gb, tol, iters);
    const double glo = std::abs(fn(lo));
    const double ghi = std::abs(fn(hi));
    return glo <= ghi ? lo : hi;
}

namespace {

bool crosses(int direction, double ga, double gb) {
    const bool rising = ga < 0.0 && gb >= 0.0;
    const bool falling = ga > 0.0 && gb <= 0.0;
    if (direction > 0) return rising;
    if (direction < 0) return falling;
    return rising || falling;
}

}  // namespace

EventResult integrate_with_events(const VectorField& field, State x0, double t0,
                                  const IntegratorConfig& cfg,
                                  const std::vector<EventSpec>& events,
                                  std::optional<double> t1) {
    const double t_end = t1.value_or(t0 + cfg.max_time);
    if (!(t_end > t0)) throw PreconditionError("integrate_with_events requires t1 > t0");
    Dopri5 stepper(field, cfg);
    stepper.reset(t0, x0);

    EventResult out;
    out.trajectory = Trajectory(t0, stepper.x());
    std::vector<double> gprev(events.size());
    std::vector<bool> pending_at_start(events.size(), false);
    for (std::size_t i = 0; i < events.size(); ++i) {
        gprev[i] = events[i].g(stepper.x());
        pending_at_start[i] = gprev[i] == 0.0;
    }

    bool first = true;
    while (stepper.t() < t_end) {
        const double ta = stepper.t();
        stepper.step(t_end);
        const double tb = stepper.t();
        const State xb = stepper.x();
        const DenseSegment& seg = stepper.segment();

        std::vector<EventHit> step_hits;
        for (std::size_t i = 0; i < events.size(); ++i) {
            const double gb = events[i].g(xb);
            if (first && pending_at_start[i]) {
                const int dir = events[i].direction;
                if (dir == 0 || (dir > 0 && gb > 0.0) || (dir < 0 && gb < 0.0))
                    step_hits.push_back({i, t0, x0});
            } else if (crosses(events[i].direction, gprev[i], gb)) {
                const double te = locate_event(seg, events[i].g, ta, gprev[i], tb, gb);
                const State xe = te == tb ? xb : seg.eval(te);
                step_hits.push_back({i, te, xe});
            }
            gprev[i] = gb;
        }
        first = false;
        std::stable_sort(step_hits.begin(), step_hits.end(),
                         [](const EventHit& a, const EventHit& b) { return a.t < b.t; });

        out.trajectory.push(seg, tb, xb);
        for (const auto& hit : step_hits) {
            out.hits.push_back(hit);
            if (events[hit.event].terminal) {
                out.trajectory.truncate_last(hit.t, hit.x);
                out.terminated = true;
                return out;
            }
        }
    }
    return out;
}

AttractorLabel converge_to_attractor(const VectorField& field, State x0,
                                     const IntegratorConfig& cfg,
                                     const AttractorCatalog& catalog) {
    for (const auto& eq : catalog.equilibria) {
        if (scaled_distance(x0, eq.x) < 1e-14) return {AttractorKind::Equilibrium, eq.label, 0.0};
    }

    Dopri5 stepper(field, cfg);
    stepper.reset(0.0, x0);

    std::vector<double> entered(catalog.equilibria.size(), -1.0);
    auto check_equilibria = [&](double t, State x) -> const LabeledPoint* {
        for (std::size_t i = 0; i < catalog.equilibria.size(); ++i) {
            if (scaled_distance(x, catalog.equilibria[i].x) < catalog.tol_eq) {
                if (entered[i] < 0.0) entered[i] = t;
                if (t - entered[i] >= catalog.dwell) return &catalog.equilibria[i];
            } else {
                entered[i] = -1.0;
            }
        }
        return nullptr;
    };
    check_equilibria(0.0, stepper.x());

    const bool use_cycle = catalog.cycle.has_value();
    const State anchor = use_cycle ? catalog.cycle->anchor : State{};
    auto section = [&](const State& x) { return x.N - anchor.N; };
    double g_prev = section(stepper.x());
    std::vector<double> returns;  // scaled P at section returns

    while (stepper.t() < cfg.max_time) {
        const double ta = stepper.t();
        stepper.step(cfg.max_time);
        const double tb = stepper.t();
        const State xb = stepper.x();

        if (const auto* eq = check_equilibria(tb, xb))
            return {AttractorKind::Equilibrium, eq->label, tb};

        if (use_cycle) {
            const double gb = section(xb);
            if (crosses(+1, g_prev, gb)) {
                const double te = locate_event(stepper.segment(), section, ta, g_prev, tb, gb);
                returns.push_back(kPredatorScale * stepper.segment().eval(te).P);
                const std::size_t n = returns.size();
                if (n >= 3) {
                    const double d1v = returns[n - 1] - returns[n - 2];
                    const double d0v = returns[n - 2] - returns[n - 3];
                    if (std::abs(d1v) < catalog.tol_cycle) {
                        double limit = returns[n - 1];
                        if (d0v != 0.0) {
                            const double q = d1v / d0v;
                            if (q > -1.0 && q < 1.0) limit += d1v * q / (1.0 - q);
                        }
                        if (std::abs(limit - kPredatorScale * anchor.P) > catalog.min_cycle_amplitude)
                            return {AttractorKind::Cycle, "cycle", tb};
                    }
                }
            }
            g_prev = gb;
        }
    }
    return {AttractorKind::Undecided, "undecided", stepper.t()};
}

}  // namespace ptip
