#include "ptip/tipping.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "ptip/errors.hpp"
#include "ptip/parallel.hpp"
#include "ptip/scan.hpp"

namespace ptip {

void ExperimentConfig::validate() const {
    climate.validate();
    integrator.validate();
    if (n_runs < 1) throw ConfigError("experiment.n_runs", "experiment.n_runs must be >= 1");
    if (!(x0.N >= 0.0) || !(x0.P >= 0.0) || !x0.finite())
        throw ConfigError("experiment.x0", "experiment.x0 must be a finite nonnegative state");
    if (!(cache_step > 0.0)) throw ConfigError("experiment.cache_step", "experiment.cache_step must be > 0");
    if (!(band > 0.0)) throw ConfigError("experiment.band", "experiment.band must be > 0");
    if (!(converged_tol > 0.0)) throw ConfigError("experiment.converged_tol", "experiment.converged_tol must be > 0");
    if (phase_bins < 1) throw ConfigError("experiment.phase_bins", "experiment.phase_bins must be >= 1");
    if (!(time_bin > 0.0)) throw ConfigError("experiment.time_bin", "experiment.time_bin must be > 0");
}

const char* to_string(TipKind k) { return k == TipKind::B ? "B" : "P"; }

const char* to_string(RunOutcome o) {
    switch (o) {
        case RunOutcome::Tipped: return "tipped";
        case RunOutcome::NoTip: return "no_tip";
        case RunOutcome::InitialTip: return "initial_tip";
        case RunOutcome::Unattributed: return "unattributed";
        case RunOutcome::Failed: return "failed";
    }
    return "?";
}

std::optional<double> resolve_r_h(const ExperimentConfig& cfg) {
    if (cfg.r_h) return cfg.r_h;
    CycleOptions copts;
    copts.integrator = cfg.integrator;
    const double lo = cfg.climate.r_low, hi = cfg.climate.r_high;
    if (cycle_exists(with_r(cfg.model, hi), copts)) return std::nullopt;
    if (!cfg.detect_r_h)
        throw ClassificationUndefined("r_h is missing and the cycle disappears inside the climate interval");
    if (!cycle_exists(with_r(cfg.model, lo), copts)) return lo;
    return detect_cycle_disappearance(cfg.model, lo, hi, 1e-3, copts).value;
}

TipKind classify_event(const TippingRecord& rec, std::optional<double> r_h) {
    return r_h && rec.r_post > *r_h ? TipKind::B : TipKind::P;
}

TippingContext::TippingContext(const ExperimentConfig& cfg) : cfg_(cfg) {
    cfg_.validate();
    r_h_ = resolve_r_h(cfg_);
    for (const auto& e : all_equilibria(cfg_.model))
        if (e.label == "e0") e0_ = e.x;

    const double step = cfg_.cache_step;
    const double top = r_h_ ? std::min(cfg_.climate.r_high, *r_h_) : cfg_.climate.r_high;
    grid0_ = std::floor(cfg_.climate.r_low / step) * step;
    const auto n = static_cast<std::size_t>(std::floor((top - grid0_) / step)) + 2;

    const double c = std::visit([](const auto& p) { return p.c; }, cfg_.model);
    double p3_max = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
        try {
            p3_max = std::max(p3_max, coexistence_equilibrium(with_r(cfg_.model, grid0_ + step * static_cast<double>(k))).P);
        } catch (const CoexistenceUndefined&) {
        }
    }
    ThresholdOptions topts;
    topts.integrator = cfg_.integrator;
    topts.box_N = 1.2 * cfg_.climate.r_high / c;
    topts.box_P = 20.0 * p3_max;

    bounds_.resize(n);
    parallel_for(n, [&](std::size_t k) {
        const double r = grid0_ + step * static_cast<double>(k);
        if (r_h_ && r > *r_h_) return;
        try {
            bounds_[k] = allee_threshold(with_r(cfg_.model, r), topts);
        } catch (const NotBistable&) {
        } catch (const ManifoldFailure&) {
        }
    });
}

std::size_t TippingContext::cached_thresholds() const {
    return static_cast<std::size_t>(
        std::count_if(bounds_.begin(), bounds_.end(), [](const auto& b) { return b.has_value(); }));
}

Membership TippingContext::member(const State& x, double r) const {
    if (r_h_ && r > *r_h_) return Membership::Outside;
    if (x.N <= 0.0 || x.P <= 0.0) return Membership::Outside;
    const double u = (r - grid0_) / cfg_.cache_step;
    const auto k = static_cast<long>(std::floor(u));
    Membership vote = Membership::Indeterminate;
    bool first = true, agree = true;
    for (long kk : {k, k + 1}) {
        if (kk < 0 || kk >= static_cast<long>(bounds_.size()) || !bounds_[kk]) continue;
        const Membership m = in_basin(x, *bounds_[kk], cfg_.band);
        if (first) {
            vote = m;
            first = false;
        } else if (m != vote) {
            agree = false;
        }
    }
    if (!first && agree && vote != Membership::Indeterminate) return vote;
    const Membership o = in_basin_oracle(x, with_r(cfg_.model, r), cfg_.integrator);
    return o == Membership::Outside ? Membership::Outside : Membership::Inside;
}

RunResult run_single_experiment(const TippingContext& ctx, std::size_t run,
                                std::vector<TimeSample>* series, double sample_dt) {
    return run_with_signal(ctx, sample_signal(ctx.config().climate, run), run, series, sample_dt);
}

RunResult run_with_signal(const TippingContext& ctx, const ClimateSignal& signal, std::size_t run,
                          std::vector<TimeSample>* series, double sample_dt) {
    const ExperimentConfig& cfg = ctx.config();
    const AttractorCatalog defaults;
    const double horizon = cfg.climate.horizon;
    RunResult res;
    res.run = run;

    struct Exit {
        double t;
        double r_pre;
        double r_post;
        State x;
        bool initial;
    };
    std::optional<Exit> exit;
    State x = cfg.x0;
    const double r0 = signal.epochs.at(0).r;
    if (ctx.member(x, r0) == Membership::Outside)
        exit = Exit{0.0, std::numeric_limits<double>::quiet_NaN(), r0, x, true};

    double entered = -1.0;
    double next_sample = 0.0;
    bool tipped = false;
    double t_now = 0.0;
    try {
        for (std::size_t k = 0; k < signal.epochs.size() && !tipped; ++k) {
            const Epoch& ep = signal.epochs[k];
            if (ep.start >= horizon) break;
            if (k > 0) {
                const Membership m = ctx.member(x, ep.r);
                if (!exit && m == Membership::Outside) {
                    exit = Exit{ep.start, signal.epochs[k - 1].r, ep.r, x, false};
                } else if (exit && m == Membership::Inside) {
                    ++res.rescues;
                    exit.reset();
                }
            }
            Dopri5 stepper(field_of(with_r(cfg.model, ep.r)), cfg.integrator);
            stepper.reset(ep.start, x);
            const double t_end = std::min(ep.end(), horizon);
            while (stepper.t() < t_end) {
                stepper.step(t_end);
                if (series) {
                    while (next_sample <= stepper.t()) {
                        const State xs = next_sample <= stepper.segment().t0 ? x : stepper.segment().eval(next_sample);
                        series->push_back({next_sample, ep.r, xs});
                        next_sample += sample_dt;
                    }
                }
                x = stepper.x();
                t_now = stepper.t();
                if (scaled_distance(x, ctx.extinction()) < defaults.tol_eq) {
                    if (entered < 0.0) entered = t_now;
                    if (t_now - entered >= defaults.dwell) {
                        tipped = true;
                        break;
                    }
                } else {
                    entered = -1.0;
                }
            }
        }
    } catch (const IntegrationError& e) {
        res.outcome = RunOutcome::Failed;
        res.error = "run " + std::to_string(run) + ": " + e.what();
        res.t_end = e.time;
        return res;
    }
    res.t_end = t_now;
    if (!tipped) {
        res.outcome = RunOutcome::NoTip;
        return res;
    }
    if (!exit) {
        res.outcome = RunOutcome::Unattributed;
        return res;
    }
    if (exit->initial) {
        res.outcome = RunOutcome::InitialTip;
        return res;
    }
    TippingRecord rec;
    rec.run = run;
    rec.t1 = exit->t;
    rec.r_pre = exit->r_pre;
    rec.r_post = exit->r_post;
    rec.x_b = exit->x;
    rec.phi_xb = phase_of(exit->x, coexistence_equilibrium(with_r(cfg.model, exit->r_pre)));
    rec.rescues = res.rescues;
    rec.kind = classify_event(rec, ctx.r_h());
    res.outcome = RunOutcome::Tipped;
    res.record = rec;
    return res;
}

void assess_convergence(const ExperimentConfig& cfg, TippingRecord& rec) {
    CycleOptions copts;
    copts.integrator = cfg.integrator;
    try {
        const LimitCycle c = find_limit_cycle(with_r(cfg.model, rec.r_pre), copts);
        rec.distance_pre = distance_to_cycle(c, rec.x_b);
        rec.converged_pre = rec.distance_pre < cfg.converged_tol;
    } catch (const NoCycleError&) {
        rec.distance_pre = std::numeric_limits<double>::infinity();
        rec.converged_pre = false;
    }
}

HistogramBundle make_histograms(const std::vector<TippingRecord>& records, std::size_t phase_bins,
                                double time_bin) {
    HistogramBundle h;
    h.phase_edges.resize(phase_bins + 1);
    for (std::size_t i = 0; i <= phase_bins; ++i)
        h.phase_edges[i] = kTwoPi * static_cast<double>(i) / static_cast<double>(phase_bins);
    h.phase_B.assign(phase_bins, 0);
    h.phase_P.assign(phase_bins, 0);
    double t_max = 0.0;
    for (const auto& rec : records) {
        auto b = static_cast<std::size_t>(rec.phi_xb / kTwoPi * static_cast<double>(phase_bins));
        b = std::min(b, phase_bins - 1);
        (rec.kind == TipKind::B ? h.phase_B : h.phase_P)[b] += 1;
        t_max = std::max(t_max, rec.t1);
    }
    const auto tb = static_cast<std::size_t>(std::floor(t_max / time_bin)) + 1;
    h.time_edges.resize(tb + 1);
    for (std::size_t i = 0; i <= tb; ++i) h.time_edges[i] = time_bin * static_cast<double>(i);
    h.time_counts.assign(tb, 0);
    for (const auto& rec : records)
        h.time_counts[std::min(tb - 1, static_cast<std::size_t>(rec.t1 / time_bin))] += 1;
    return h;
}

std::size_t MonteCarloResult::count(RunOutcome o) const {
    return static_cast<std::size_t>(
        std::count_if(runs.begin(), runs.end(), [o](const RunResult& r) { return r.outcome == o; }));
}

MonteCarloResult run_monte_carlo(const ExperimentConfig& cfg) {
    const TippingContext ctx(cfg);
    return run_monte_carlo(ctx);
}

MonteCarloResult run_monte_carlo(const TippingContext& ctx) {
    const ExperimentConfig& cfg = ctx.config();
    MonteCarloResult mc;
    mc.r_h = ctx.r_h();
    mc.runs.resize(cfg.n_runs);
    parallel_for(cfg.n_runs, [&](std::size_t i) {
        RunResult r = run_single_experiment(ctx, i);
        if (r.record) assess_convergence(cfg, *r.record);
        mc.runs[i] = std::move(r);
    });
    for (const auto& r : mc.runs)
        if (r.record) mc.records.push_back(*r.record);
    mc.histograms = make_histograms(mc.records, cfg.phase_bins, cfg.time_bin);
    return mc;
}

std::vector<double> mixture_measure_histogram(const ExperimentConfig& cfg,
                                              const std::vector<TippingRecord>& records,
                                              std::size_t bins, std::size_t J, double T, double eps,
                                              double r_bin) {
    if (bins == 0 || !(r_bin > 0.0)) throw PreconditionError("mixture_measure_histogram: bins and r_bin must be positive");
    std::vector<double> mix(bins, 0.0);
    if (records.empty()) return mix;
    const double r0 = cfg.climate.r_low;
    std::vector<std::vector<double>> groups;
    for (const auto& rec : records) {
        const auto k = static_cast<std::size_t>(std::max(0.0, std::floor((rec.r_pre - r0) / r_bin)));
        if (groups.size() <= k) groups.resize(k + 1);
        groups[k].push_back(rec.r_pre);
    }
    for (std::size_t k = 0; k < groups.size(); ++k) {
        if (groups[k].empty()) continue;
        LimitCycle cycle;
        try {
            cycle = find_limit_cycle(with_r(cfg.model, r0 + (k + 0.5) * r_bin));
        } catch (const NoCycleError&) {
            cycle = find_limit_cycle(with_r(cfg.model, *std::min_element(groups[k].begin(), groups[k].end())));
        }
        const auto h = invariant_measure(cycle, J, T, eps, cfg.integrator).histogram(bins);
        for (std::size_t i = 0; i < bins; ++i) mix[i] += static_cast<double>(groups[k].size()) * h[i];
    }
    const double total = std::accumulate(mix.begin(), mix.end(), 0.0);
    if (total > 0.0)
        for (auto& v : mix) v /= total;
    return mix;
}

double pearson(const std::vector<double>& a, const std::vector<double>& b) {
    if (a.size() != b.size() || a.size() < 2) throw PreconditionError("pearson needs equal sizes >= 2");
    const double n = static_cast<double>(a.size());
    const double ma = std::accumulate(a.begin(), a.end(), 0.0) / n;
    const double mb = std::accumulate(b.begin(), b.end(), 0.0) / n;
    double sab = 0.0, saa = 0.0, sbb = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        sab += (a[i] - ma) * (b[i] - mb);
        saa += (a[i] - ma) * (a[i] - ma);
        sbb += (b[i] - mb) * (b[i] - mb);
    }
    return sab / std::sqrt(saa * sbb);
}

double largest_phase_gap(std::vector<double> phases) {
    if (phases.empty()) return kTwoPi;
    std::sort(phases.begin(), phases.end());
    double gap = kTwoPi - phases.back() + phases.front();
    for (std::size_t i = 1; i < phases.size(); ++i) gap = std::max(gap, phases[i] - phases[i - 1]);
    return gap;
}

}  // namespace ptip
