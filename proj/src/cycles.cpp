#include "ptip/cycles.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include <boost/math/tools/minima.hpp>

#include "ptip/errors.hpp"
#include "ptip/parallel.hpp"

namespace ptip {

double wrap_phase(double phi) {
    double w = std::fmod(phi, kTwoPi);
    if (w < 0.0) w += kTwoPi;
    if (w >= kTwoPi) w = 0.0;
    return w;
}

double phase_of(const State& point, const State& anchor) {
    const double dx = point.N - anchor.N;
    const double dy = kPredatorScale * (point.P - anchor.P);
    if (std::hypot(dx, dy) < 1e-12) throw UndefinedPhase("phase undefined at the anchor");
    return wrap_phase(std::atan2(dy, dx));
}

int winding_number(const std::vector<State>& curve, const State& anchor) {
    double total = 0.0;
    const std::size_t n = curve.size();
    for (std::size_t i = 0; i < n; ++i) {
        const State a = curve[i] - anchor;
        const State b = curve[(i + 1) % n] - anchor;
        const double ax = a.N, ay = kPredatorScale * a.P;
        const double bx = b.N, by = kPredatorScale * b.P;
        total += std::atan2(ax * by - ay * bx, ax * bx + ay * by);
    }
    return static_cast<int>(std::lround(total / kTwoPi));
}

double scaled_perimeter(const std::vector<State>& curve) {
    double len = 0.0;
    for (std::size_t i = 0; i < curve.size(); ++i)
        len += scaled_distance(curve[i], curve[(i + 1) % curve.size()]);
    return len;
}

State LimitCycle::point_at(double t) const {
    double tt = std::fmod(t, period);
    if (tt < 0.0) tt += period;
    const double h = dt();
    std::size_t k = std::min(samples.size() - 1, static_cast<std::size_t>(tt / h));
    const double rest = tt - static_cast<double>(k) * h;
    if (rest <= 0.0) return samples[k];
    return integrate(field_of(model), samples[k], 0.0, rest).back();
}

std::pair<State, State> LimitCycle::envelope() const {
    State lo = samples.front(), hi = samples.front();
    for (const auto& s : samples) {
        lo.N = std::min(lo.N, s.N);
        lo.P = std::min(lo.P, s.P);
        hi.N = std::max(hi.N, s.N);
        hi.P = std::max(hi.P, s.P);
    }
    return {lo, hi};
}

LimitCycle find_limit_cycle(const Model& m, const CycleOptions& opts, std::optional<State> start) {
    State e3;
    try {
        e3 = coexistence_equilibrium(m);
    } catch (const CoexistenceUndefined& e) {
        throw NoCycleError(std::string("no cycle: ") + e.what());
    }
    const AttractorCatalog catalog = attractor_catalog(m);
    const VectorField field = field_of(m);
    const IntegratorConfig& cfg = opts.integrator;

    Dopri5 stepper(field, cfg);
    stepper.reset(0.0, start.value_or(State{e3.N + opts.start_offset, e3.P}));

    std::vector<double> entered(catalog.equilibria.size(), -1.0);
    auto section = [&](const State& x) { return x.N - e3.N; };
    double g_prev = section(stepper.x());
    std::vector<std::pair<double, State>> crossings;

    const double t_max = std::max(cfg.max_time, opts.transient);
    while (stepper.t() < t_max) {
        const double ta = stepper.t();
        stepper.step(t_max);
        const double tb = stepper.t();
        const State xb = stepper.x();

        for (std::size_t i = 0; i < catalog.equilibria.size(); ++i) {
            if (scaled_distance(xb, catalog.equilibria[i].x) < catalog.tol_eq) {
                if (entered[i] < 0.0) entered[i] = tb;
                if (tb - entered[i] >= catalog.dwell)
                    throw NoCycleError("no cycle at r=" + std::to_string(r_of(m)) +
                                       ": orbit converges to " + catalog.equilibria[i].label);
            } else {
                entered[i] = -1.0;
            }
        }

        const double gb = section(xb);
        if (g_prev < 0.0 && gb >= 0.0) {
            const double te = locate_event(stepper.segment(), section, ta, g_prev, tb, gb);
            crossings.emplace_back(te, te == tb ? xb : stepper.segment().eval(te));
            const std::size_t n = crossings.size();
            if (n >= 3 && te >= opts.transient &&
                scaled_distance(crossings[n - 1].second, crossings[n - 2].second) < opts.return_tol) {
                const double p2 = kPredatorScale * crossings[n - 1].second.P;
                const double p1 = kPredatorScale * crossings[n - 2].second.P;
                const double p0 = kPredatorScale * crossings[n - 3].second.P;
                double limit = p2;
                if (p1 != p0) {
                    const double q = (p2 - p1) / (p1 - p0);
                    if (q > -1.0 && q < 1.0) limit += (p2 - p1) * q / (1.0 - q);
                }
                if (std::abs(limit - kPredatorScale * e3.P) < opts.min_amplitude)
                    throw NoCycleError("no cycle at r=" + std::to_string(r_of(m)) +
                                       ": returns contract onto e3");
                break;
            }
        }
        g_prev = gb;
    }
    const std::size_t n = crossings.size();
    if (n < 3 || stepper.t() >= t_max)
        throw NoCycleError("no cycle at r=" + std::to_string(r_of(m)) +
                           ": section returns did not converge within max_time");

    LimitCycle cyc;
    cyc.model = m;
    cyc.anchor = e3;
    cyc.period = crossings[n - 1].first - crossings[n - 2].first;
    const State x0 = crossings[n - 1].second;
    const Trajectory one = integrate(field, x0, 0.0, cyc.period, cfg);
    cyc.samples.resize(opts.samples);
    for (std::size_t i = 0; i < opts.samples; ++i)
        cyc.samples[i] = one.at(cyc.period * static_cast<double>(i) / static_cast<double>(opts.samples));
    cyc.samples[0] = x0;
    cyc.closure_error = scaled_distance(one.back(), x0);

    for (const auto& s : cyc.samples) {
        if (!(s.P > 0.0) || !(s.N > 0.0))
            throw NoCycleError("no cycle at r=" + std::to_string(r_of(m)) +
                               ": orbit touches an invariant axis");
    }
    if (std::abs(winding_number(cyc.samples, e3)) != 1)
        throw NoCycleError("no cycle at r=" + std::to_string(r_of(m)) + ": orbit does not encircle e3");
    return cyc;
}

double distance_to_cycle(const LimitCycle& cycle, const State& x) {
    std::size_t k = 0;
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < cycle.samples.size(); ++i) {
        const double d = scaled_distance(cycle.samples[i], x);
        if (d < best) {
            best = d;
            k = i;
        }
    }
    const double h = cycle.dt();
    const double tk = static_cast<double>(k) * h;
    auto f = [&](double t) { return scaled_distance(cycle.point_at(t), x); };
    const auto res = boost::math::tools::brent_find_minima(f, tk - h, tk + h, 40);
    return std::min(best, res.second);
}

std::size_t InvariantMeasure::count_within(double phi) const {
    std::size_t k = 0;
    for (double p : endpoint_phases) {
        double d = std::abs(p - phi);
        d = std::min(d, kTwoPi - d);
        if (d <= eps) ++k;
    }
    return k;
}

double InvariantMeasure::mass_at(double phi) const {
    return endpoint_phases.empty() ? 0.0
                                   : static_cast<double>(count_within(phi)) / static_cast<double>(J());
}

std::vector<std::pair<double, double>> InvariantMeasure::curve(std::size_t n) const {
    std::vector<std::pair<double, double>> out(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double phi = kTwoPi * static_cast<double>(i) / static_cast<double>(n);
        out[i] = {phi, mass_at(phi)};
    }
    return out;
}

std::vector<double> InvariantMeasure::histogram(std::size_t bins) const {
    std::vector<double> h(bins, 0.0);
    for (double p : endpoint_phases) {
        auto b = static_cast<std::size_t>(p / kTwoPi * static_cast<double>(bins));
        h[std::min(b, bins - 1)] += 1.0;
    }
    for (double& v : h) v /= static_cast<double>(std::max<std::size_t>(1, J()));
    return h;
}

std::vector<std::size_t> InvariantMeasure::partition_counts() const {
    const double w = 2.0 * eps;
    const auto windows = static_cast<std::size_t>(std::ceil(kTwoPi / w));
    std::vector<std::size_t> counts(windows, 0);
    for (double p : endpoint_phases) {
        auto k = static_cast<std::size_t>(p / w);
        ++counts[std::min(k, windows - 1)];
    }
    return counts;
}

std::vector<State> arc_length_points(const LimitCycle& cycle, std::size_t J, double rotation) {
    const Trajectory one = integrate(field_of(cycle.model), cycle.samples[0], 0.0, cycle.period);
    const std::size_t M = std::max<std::size_t>(16 * J, 16 * cycle.samples.size());
    std::vector<double> ts(M + 1), cum(M + 1, 0.0);
    std::vector<State> pts(M + 1);
    for (std::size_t i = 0; i <= M; ++i) {
        ts[i] = cycle.period * static_cast<double>(i) / static_cast<double>(M);
        pts[i] = i == M ? cycle.samples[0] : one.at(ts[i]);
        if (i > 0) cum[i] = cum[i - 1] + scaled_distance(pts[i], pts[i - 1]);
    }
    const double L = cum[M];
    std::vector<State> out(J);
    for (std::size_t j = 0; j < J; ++j) {
        double s = (static_cast<double>(j) + rotation) * L / static_cast<double>(J);
        s = std::fmod(s, L);
        if (s < 0.0) s += L;
        auto it = std::upper_bound(cum.begin(), cum.end(), s);
        std::size_t k = std::min<std::size_t>(M, static_cast<std::size_t>(it - cum.begin()));
        if (k == 0) k = 1;
        const double seg = cum[k] - cum[k - 1];
        const double frac = seg > 0.0 ? (s - cum[k - 1]) / seg : 0.0;
        const double t = ts[k - 1] + frac * (ts[k] - ts[k - 1]);
        out[j] = t >= cycle.period ? cycle.samples[0] : one.at(t);
    }
    return out;
}

InvariantMeasure invariant_measure(const LimitCycle& cycle, std::size_t J, double T, double eps,
                                   const IntegratorConfig& cfg, double rotation) {
    if (J < 100) throw PreconditionError("invariant_measure requires J >= 100");
    if (!(T > 0.0) || !(eps > 0.0)) throw PreconditionError("invariant_measure requires T, eps > 0");
    const std::vector<State> starts = arc_length_points(cycle, J, rotation);
    const VectorField field = field_of(cycle.model);

    InvariantMeasure mu;
    mu.T = T;
    mu.eps = eps;
    mu.endpoint_phases.resize(J);
    parallel_for(J, [&](std::size_t j) {
        try {
            Dopri5 stepper(field, cfg);
            stepper.reset(0.0, starts[j]);
            while (stepper.t() < T) stepper.step(T);
            mu.endpoint_phases[j] = phase_of(stepper.x(), cycle.anchor);
        } catch (const IntegrationError& e) {
            throw IntegrationError("invariant_measure member " + std::to_string(j) + ": " + e.what(),
                                   e.time, e.last_state);
        }
    });
    return mu;
}

std::vector<State> CycleFamily::union_samples() const {
    std::vector<State> all;
    for (const auto& c : cycles) all.insert(all.end(), c.samples.begin(), c.samples.end());
    return all;
}

double hausdorff_scaled(const std::vector<State>& a, const std::vector<State>& b) {
    auto directed = [](const std::vector<State>& x, const std::vector<State>& y) {
        double worst = 0.0;
        for (const auto& p : x) {
            double best = std::numeric_limits<double>::infinity();
            for (const auto& q : y) best = std::min(best, scaled_distance(p, q));
            worst = std::max(worst, best);
        }
        return worst;
    };
    return std::max(directed(a, b), directed(b, a));
}

CycleFamily cycle_family(const Model& tmpl, double r2, double r1, double step,
                         const CycleOptions& opts) {
    if (!(r2 < r1)) throw PreconditionError("cycle_family requires r2 < r1");
    if (!(step > 0.0)) throw PreconditionError("cycle_family requires step > 0");
    const auto n = static_cast<std::size_t>(std::ceil((r1 - r2) / step - 1e-9));
    CycleFamily fam;
    fam.r2 = r2;
    fam.r1 = r1;
    fam.step = (r1 - r2) / static_cast<double>(n);
    fam.cycles.reserve(n + 1);
    std::optional<State> warm;
    for (std::size_t i = 0; i <= n; ++i) {
        const double r = i == n ? r1 : r2 + fam.step * static_cast<double>(i);
        try {
            fam.cycles.push_back(find_limit_cycle(with_r(tmpl, r), opts, warm));
        } catch (const NoCycleError& e) {
            std::ostringstream msg;
            msg << "cycle family invalid at r=" << r << ": " << e.what();
            throw PathInvalid(msg.str(), r);
        }
        warm = fam.cycles.back().samples[0];
    }

    if (fam.cycles.size() >= 3) {
        std::vector<double> gaps;
        for (std::size_t i = 0; i + 1 < fam.cycles.size(); ++i)
            gaps.push_back(hausdorff_scaled(fam.cycles[i].samples, fam.cycles[i + 1].samples));
        std::vector<double> sorted = gaps;
        std::nth_element(sorted.begin(), sorted.begin() + sorted.size() / 2, sorted.end());
        const double median = sorted[sorted.size() / 2];
        for (std::size_t i = 0; i < gaps.size(); ++i) {
            if (gaps[i] > 10.0 * median && gaps[i] > 1e-6) {
                std::ostringstream msg;
                msg << "cycle family jumps between r=" << fam.cycles[i].r() << " and r="
                    << fam.cycles[i + 1].r();
                throw PathInvalid(msg.str(), fam.cycles[i + 1].r());
            }
        }
    }
    return fam;
}

}  // namespace ptip
