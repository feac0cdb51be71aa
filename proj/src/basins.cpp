#include "ptip/basins.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include <boost/math/tools/minima.hpp>
#include <boost/math/tools/roots.hpp>

#include "ptip/errors.hpp"
#include "ptip/parallel.hpp"

namespace ptip {

namespace {

constexpr std::size_t kChunk = 64;

double orient(const State& a, const State& b, const State& c) {
    return (b.N - a.N) * (c.P - a.P) - (b.P - a.P) * (c.N - a.N);
}

double point_segment_distance(const State& p, const State& a, const State& b) {
    const double dx = b.N - a.N, dy = b.P - a.P;
    const double len2 = dx * dx + dy * dy;
    double u = len2 > 0.0 ? ((p.N - a.N) * dx + (p.P - a.P) * dy) / len2 : 0.0;
    u = std::clamp(u, 0.0, 1.0);
    return std::hypot(p.N - a.N - u * dx, p.P - a.P - u * dy);
}

// Stable eigenvector of the saddle in the scaled plane, unit length.
State stable_direction(const Model& m, const State& saddle) {
    const Mat2 j = jacobian(m, saddle);
    const double a = j[0][0], b = j[0][1] / kPredatorScale;
    const double c = j[1][0] * kPredatorScale, d = j[1][1];
    const auto ev = eigenvalues(Mat2{{{a, b}, {c, d}}});
    const double lam = std::min(ev[0].real(), ev[1].real());
    State v = std::abs(b) >= std::abs(c) ? State{b, lam - a} : State{lam - d, c};
    if (std::abs(b) < 1e-300 && std::abs(c) < 1e-300)
        v = std::abs(a - lam) < std::abs(d - lam) ? State{1.0, 0.0} : State{0.0, 1.0};
    const double n = std::hypot(v.N, v.P);
    return {v.N / n, v.P / n};
}

struct BranchEnd {
    std::vector<State> points;  // from the seed outwards
};

// Backward integration of one branch, recording vertices at the requested
// scaled spacing. Stops at the box, an axis, or a repelling equilibrium.
BranchEnd trace_branch(const Model& m, const State& seed, const State& box_hi,
                       const std::vector<State>& stops, const ThresholdOptions& opts) {
    const VectorField f = field_of(m);
    const VectorField back = [f](const State& x) { return -1.0 * f(x); };
    IntegratorConfig cfg = opts.integrator;
    Dopri5 stepper(back, cfg);
    stepper.reset(0.0, seed);

    BranchEnd out;
    out.points.push_back(seed);
    auto inside = [&](const State& x) {
        return x.N <= box_hi.N && x.P <= box_hi.P;
    };
    try {
        while (stepper.t() < opts.max_time) {
            stepper.step(opts.max_time);
            const DenseSegment& seg = stepper.segment();
            const State xe = stepper.x();
            const double chord = scaled_distance(out.points.back(), xe);
            const auto sub = std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil(chord / opts.spacing)));
            for (std::size_t k = 1; k <= sub; ++k) {
                const double t = k == sub ? seg.t1() : seg.t0 + seg.h * static_cast<double>(k) / static_cast<double>(sub);
                State x = k == sub ? xe : seg.eval(t);
                const State prev = out.points.back();
                if (!inside(x)) {
                    // Clip the chord at the box edge.
                    double u = 1.0;
                    if (x.N > box_hi.N) u = std::min(u, (box_hi.N - prev.N) / (x.N - prev.N));
                    if (x.P > box_hi.P) u = std::min(u, (box_hi.P - prev.P) / (x.P - prev.P));
                    out.points.push_back(prev + u * (x - prev));
                    return out;
                }
                if (kPredatorScale * x.P < 1e-7 || x.N < 1e-7) {
                    if (kPredatorScale * x.P < 1e-7) x.P = 0.0;
                    if (x.N < 1e-7) x.N = 0.0;
                    out.points.push_back(x);
                    return out;
                }
                for (const State& e : stops) {
                    if (scaled_distance(x, e) < 1e-6) {
                        out.points.push_back(e);
                        return out;
                    }
                }
                out.points.push_back(x);
            }
        }
    } catch (const IntegrationError& e) {
        throw ManifoldFailure(std::string("threshold branch failed: ") + e.what(), out.points);
    }
    throw ManifoldFailure("threshold branch did not leave the box within max_time", out.points);
}

}  // namespace

const char* to_string(Membership m) {
    switch (m) {
        case Membership::Inside: return "inside";
        case Membership::Outside: return "outside";
        case Membership::Indeterminate: return "indeterminate";
    }
    return "?";
}

const char* to_string(BasinClass c) {
    switch (c) {
        case BasinClass::Stable: return "stable";
        case BasinClass::Marginal: return "marginal";
        case BasinClass::Partial: return "partial";
        case BasinClass::AlmostTotal: return "almost_total";
        case BasinClass::Total: return "total";
    }
    return "?";
}

BasinBoundary::BasinBoundary(Model model, State saddle, State anchor, std::vector<State> polyline,
                             State box_hi)
    : model_(std::move(model)), saddle_(saddle), anchor_(anchor), poly_(std::move(polyline)),
      box_hi_(box_hi) {
    scaled_.reserve(poly_.size());
    for (const auto& p : poly_) scaled_.push_back(to_scaled(p));
    const std::size_t segs = scaled_.size() > 1 ? scaled_.size() - 1 : 0;
    for (std::size_t b = 0; b < segs; b += kChunk) {
        Chunk c{b, std::min(segs, b + kChunk), 0, 0, 0, 0};
        c.lo_x = c.hi_x = scaled_[b].N;
        c.lo_y = c.hi_y = scaled_[b].P;
        for (std::size_t i = b; i <= c.end; ++i) {
            c.lo_x = std::min(c.lo_x, scaled_[i].N);
            c.hi_x = std::max(c.hi_x, scaled_[i].N);
            c.lo_y = std::min(c.lo_y, scaled_[i].P);
            c.hi_y = std::max(c.hi_y, scaled_[i].P);
        }
        chunks_.push_back(c);
    }
}

bool BasinBoundary::in_box(const State& x) const {
    return x.N >= 0.0 && x.P >= 0.0 && x.N <= box_hi_.N && x.P <= box_hi_.P;
}

double BasinBoundary::distance(const State& x) const {
    const State p = to_scaled(x);
    if (scaled_.size() == 1) return std::hypot(p.N - scaled_[0].N, p.P - scaled_[0].P);
    double best = std::numeric_limits<double>::infinity();
    for (const auto& c : chunks_) {
        const double dx = std::max({c.lo_x - p.N, 0.0, p.N - c.hi_x});
        const double dy = std::max({c.lo_y - p.P, 0.0, p.P - c.hi_y});
        if (std::hypot(dx, dy) >= best) continue;
        for (std::size_t i = c.begin; i < c.end; ++i)
            best = std::min(best, point_segment_distance(p, scaled_[i], scaled_[i + 1]));
    }
    return best;
}

std::size_t BasinBoundary::crossings(const State& a_in, const State& b_in) const {
    const State a = to_scaled(a_in), b = to_scaled(b_in);
    const double lx = std::min(a.N, b.N), hx = std::max(a.N, b.N);
    const double ly = std::min(a.P, b.P), hy = std::max(a.P, b.P);
    std::size_t count = 0;
    for (const auto& c : chunks_) {
        if (c.hi_x < lx || c.lo_x > hx || c.hi_y < ly || c.lo_y > hy) continue;
        for (std::size_t i = c.begin; i < c.end; ++i) {
            const State& p = scaled_[i];
            const State& q = scaled_[i + 1];
            const double o1 = orient(a, b, p);
            const double o2 = orient(a, b, q);
            // Half-open rule so a vertex on the line is counted once.
            if ((o1 >= 0.0) == (o2 >= 0.0)) continue;
            const double o3 = orient(p, q, a);
            const double o4 = orient(p, q, b);
            if ((o3 > 0.0 && o4 < 0.0) || (o3 < 0.0 && o4 > 0.0)) ++count;
        }
    }
    return count;
}

double BasinBoundary::signed_distance(const State& x) const {
    const double d = distance(x);
    return crossings(x, anchor_) % 2 == 0 ? d : -d;
}

BasinBoundary allee_threshold(const Model& m, const ThresholdOptions& opts) {
    const auto saddle = threshold_saddle(m);
    if (!saddle)
        throw NotBistable("no threshold saddle at r=" + std::to_string(r_of(m)));
    State e3;
    try {
        e3 = coexistence_equilibrium(m);
    } catch (const CoexistenceUndefined& e) {
        throw NotBistable(std::string("no coexistence equilibrium: ") + e.what());
    }
    const double K = r_of(m) / std::visit([](const auto& p) { return p.c; }, m);
    const State box{opts.box_N > 0.0 ? opts.box_N : 1.2 * K,
                    opts.box_P > 0.0 ? opts.box_P : 20.0 * e3.P};

    std::vector<State> stops;
    for (const auto& e : equilibria(m))
        if (e.label != saddle->label && e.ecological) stops.push_back(e.x);

    const State v = stable_direction(m, saddle->x);
    const State step = from_scaled(opts.seed_offset * v);
    const State s = saddle->x;

    std::vector<State> poly;
    if (family_of(m) == Family::Rma) {
        const State seed = step.P > 0.0 ? s + step : s - step;
        auto branch = trace_branch(m, seed, box, stops, opts);
        poly.push_back(s);
        poly.insert(poly.end(), branch.points.begin(), branch.points.end());
    } else {
        auto a = trace_branch(m, s + step, box, stops, opts);
        auto b = trace_branch(m, s - step, box, stops, opts);
        if (a.points.back().P > b.points.back().P) std::swap(a, b);
        poly.assign(a.points.rbegin(), a.points.rend());
        poly.push_back(s);
        poly.insert(poly.end(), b.points.begin(), b.points.end());
    }
    return BasinBoundary(m, s, e3, std::move(poly), box);
}

Membership in_basin(const State& x, const BasinBoundary& boundary, double band) {
    if (boundary.distance(x) < band) return Membership::Indeterminate;
    if (x.N <= 0.0 || x.P <= 0.0) return Membership::Outside;
    if (!boundary.in_box(x)) return Membership::Indeterminate;
    return boundary.crossings(x, boundary.anchor()) % 2 == 0 ? Membership::Inside
                                                               : Membership::Outside;
}

Membership in_basin_oracle(const State& x, const Model& m, const IntegratorConfig& cfg) {
    const AttractorLabel label = converge_to_attractor(field_of(m), x, cfg, attractor_catalog(m));
    switch (label.kind) {
        case AttractorKind::Cycle: return Membership::Inside;
        case AttractorKind::Equilibrium:
            return label.name == "e3" ? Membership::Inside : Membership::Outside;
        case AttractorKind::Undecided: break;
    }
    return Membership::Indeterminate;
}

bool in_basin_resolved(const State& x, const BasinBoundary& boundary, double band) {
    Membership mb = in_basin(x, boundary, band);
    if (mb == Membership::Indeterminate) mb = in_basin_oracle(x, boundary.model());
    if (mb == Membership::Indeterminate)
        return boundary.in_box(x) && boundary.signed_distance(x) >= 0.0;
    return mb == Membership::Inside;
}

namespace {

// Signed distance that falls back to the oracle for the sign outside the box.
double cycle_signed_distance(const State& x, const BasinBoundary& b) {
    if (b.in_box(x)) return b.signed_distance(x);
    const double d = b.distance(x);
    return in_basin_oracle(x, b.model()) == Membership::Outside ? -d : d;
}

double refine_extremum(const LimitCycle& cycle, const BasinBoundary& b, std::size_t k, double sign,
                       double* t_at) {
    const double h = cycle.dt();
    const double tk = static_cast<double>(k) * h;
    auto f = [&](double t) { return sign * cycle_signed_distance(cycle.point_at(t), b); };
    const auto res = boost::math::tools::brent_find_minima(f, tk - h, tk + h, 40);
    const double fk = sign * cycle_signed_distance(cycle.samples[k], b);
    if (res.second < fk) {
        if (t_at) *t_at = wrap_phase(res.first / cycle.period * kTwoPi) / kTwoPi * cycle.period;
        return sign * res.second;
    }
    if (t_at) *t_at = tk;
    return sign * fk;
}

double locate_crossing(const LimitCycle& cycle, const BasinBoundary& b, double ta, double da,
                       double tb, double db) {
    auto f = [&](double t) { return cycle_signed_distance(cycle.point_at(t), b); };
    boost::uintmax_t iters = 200;
    auto tol = [](double lo, double hi) { return std::abs(hi - lo) < 1e-11; };
    const auto br = boost::math::tools::toms748_solve(f, ta, tb, da, db, tol, iters);
    return 0.5 * (br.first + br.second);
}

PhaseInterval interval_of(const BasinClassification& bc, const LimitCycle& cycle) {
    PhaseInterval iv;
    switch (bc.cls) {
        case BasinClass::Stable: return iv;
        case BasinClass::Total:
        case BasinClass::AlmostTotal:
            iv.empty = false;
            iv.lo = 0.0;
            iv.width = kTwoPi;
            return iv;
        case BasinClass::Marginal:
            if (bc.crossings.empty()) {
                iv.empty = false;
                iv.lo = phase_of(cycle.point_at(bc.t_min), cycle.anchor);
                iv.width = 0.0;
                return iv;
            }
            break;
        case BasinClass::Partial: break;
    }
    // First exit and the last entry after it, in time order.
    const auto& cs = bc.crossings;
    std::size_t first_exit = cs.size();
    for (std::size_t i = 0; i < cs.size(); ++i)
        if (cs[i].exiting) { first_exit = i; break; }
    if (first_exit == cs.size()) return iv;
    std::size_t last_entry = first_exit;
    for (std::size_t k = 1; k < cs.size(); ++k) {
        const std::size_t i = (first_exit + cs.size() - k) % cs.size();
        if (!cs[i].exiting) { last_entry = i; break; }
    }
    if (last_entry == first_exit) return iv;
    const bool ccw = winding_number(cycle.samples, cycle.anchor) > 0;
    const double a = cs[first_exit].phi, b = cs[last_entry].phi;
    iv.empty = false;
    iv.lo = ccw ? a : b;
    iv.width = wrap_phase(ccw ? b - a : a - b);
    return iv;
}

}  // namespace

bool PhaseInterval::contains(double phi) const {
    if (empty) return false;
    if (width >= kTwoPi) return true;
    return wrap_phase(phi - lo) <= width;
}

double min_signed_distance(const LimitCycle& cycle, const BasinBoundary& boundary, double* t_at) {
    std::size_t k = 0;
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < cycle.samples.size(); ++i) {
        const double d = cycle_signed_distance(cycle.samples[i], boundary);
        if (d < best) {
            best = d;
            k = i;
        }
    }
    return refine_extremum(cycle, boundary, k, 1.0, t_at);
}

BasinClassification classify_basin_instability(const LimitCycle& cycle,
                                               const BasinBoundary& boundary,
                                               const ClassifyOptions& opts) {
    if (family_of(cycle.model) != family_of(boundary.model()))
        throw PreconditionError("cycle and boundary belong to different model families");
    const std::size_t n = cycle.samples.size();
    std::vector<double> d(n);
    BasinClassification bc;
    std::size_t outside = 0, k_min = 0, k_max = 0;
    for (std::size_t i = 0; i < n; ++i) {
        d[i] = cycle_signed_distance(cycle.samples[i], boundary);
        if (std::abs(d[i]) < opts.band) ++bc.indeterminate;
        if (d[i] < 0.0) ++outside;
        if (d[i] < d[k_min]) k_min = i;
        if (d[i] > d[k_max]) k_max = i;
    }
    if (static_cast<double>(bc.indeterminate) > opts.max_indeterminate * static_cast<double>(n)) {
        std::ostringstream msg;
        msg << bc.indeterminate << " of " << n
            << " cycle samples lie in the indeterminate band; refine the polyline";
        throw ResolutionError(msg.str());
    }
    bc.outside_fraction = static_cast<double>(outside) / static_cast<double>(n);
    bc.d_min = refine_extremum(cycle, boundary, k_min, 1.0, &bc.t_min);
    bc.d_max = d[k_max];

    const double h = cycle.dt();
    for (std::size_t i = 0; i < n; ++i) {
        const std::size_t j = (i + 1) % n;
        if ((d[i] < 0.0) == (d[j] < 0.0)) continue;
        const double ta = static_cast<double>(i) * h;
        const double t = locate_crossing(cycle, boundary, ta, d[i], ta + h, d[j]);
        CrossingPoint cp;
        cp.t = std::fmod(t, cycle.period);
        cp.x = cycle.point_at(cp.t);
        cp.phi = phase_of(cp.x, cycle.anchor);
        cp.exiting = d[j] < 0.0;
        bc.crossings.push_back(cp);
    }

    const double inside_fraction = 1.0 - bc.outside_fraction;
    if (outside == 0) {
        bc.cls = bc.d_min < opts.tangency_tol ? BasinClass::Marginal : BasinClass::Stable;
        if (bc.d_min <= -opts.tangency_tol) bc.cls = BasinClass::Partial;
    } else if (outside == n) {
        bc.d_max = refine_extremum(cycle, boundary, k_max, -1.0, nullptr);
        bc.cls = bc.d_max > -opts.tangency_tol ? BasinClass::AlmostTotal : BasinClass::Total;
    } else if (bc.outside_fraction <= opts.marginal_fraction && bc.d_min > -opts.tangency_tol) {
        bc.cls = BasinClass::Marginal;
    } else if (inside_fraction <= opts.marginal_fraction && bc.d_max < opts.tangency_tol) {
        bc.cls = BasinClass::AlmostTotal;
    } else {
        bc.cls = BasinClass::Partial;
    }
    return bc;
}

PhaseInterval unstable_phase_interval(const LimitCycle& cycle, const BasinBoundary& boundary,
                                      const ClassifyOptions& opts) {
    return interval_of(classify_basin_instability(cycle, boundary, opts), cycle);
}

BasinBoundary threshold_covering(const Model& m, const LimitCycle& cycle, ThresholdOptions opts) {
    const auto [lo, hi] = cycle.envelope();
    (void)lo;
    const double K = r_of(m) / std::visit([](const auto& p) { return p.c; }, m);
    double P3 = 0.0;
    try {
        P3 = coexistence_equilibrium(m).P;
    } catch (const CoexistenceUndefined& e) {
        throw NotBistable(std::string("no coexistence equilibrium: ") + e.what());
    }
    if (opts.box_N <= 0.0) opts.box_N = std::max(1.2 * K, 1.2 * hi.N);
    if (opts.box_P <= 0.0) opts.box_P = std::max(20.0 * P3, 1.2 * hi.P);
    return allee_threshold(m, opts);
}

double marginal_r2(const LimitCycle& cycle, double lo, double hi, double tol,
                   const ThresholdOptions& topts) {
    auto f = [&](double r2) {
        return min_signed_distance(cycle, threshold_covering(with_r(cycle.model, r2), cycle, topts));
    };
    double flo = f(lo), fhi = f(hi);
    if ((flo < 0.0) == (fhi < 0.0)) {
        std::ostringstream msg;
        msg << "no tangency in [" << lo << ", " << hi << "]: minimum distances " << flo << ", " << fhi;
        throw BracketError(msg.str());
    }
    while (hi - lo > tol) {
        const double mid = 0.5 * (lo + hi);
        const double fm = f(mid);
        if ((fm < 0.0) == (flo < 0.0)) {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
        }
    }
    return 0.5 * (lo + hi);
}

double GridSpec::r_at(std::size_t i) const {
    return r_count <= 1 ? r_min : r_min + (r_max - r_min) * static_cast<double>(i) / static_cast<double>(r_count - 1);
}

double GridSpec::s_at(std::size_t j) const {
    return s_count <= 1 ? s_min : s_min + (s_max - s_min) * static_cast<double>(j) / static_cast<double>(s_count - 1);
}

void GridSpec::validate() const {
    if (r_count == 0 || s_count == 0) throw PreconditionError("grid counts must be positive");
    if (r_max < r_min || s_max < s_min) throw PreconditionError("grid ranges must be ascending");
}

BiRegionMap bi_region_map(const Model& tmpl, double r1, double s1, const GridSpec& grid,
                          const CycleOptions& copts, const ClassifyOptions& opts) {
    grid.validate();
    const Model m1 = with_second_param(with_r(tmpl, r1), s1);
    const LimitCycle base = find_limit_cycle(m1, copts);

    BiRegionMap map;
    map.r1 = r1;
    map.s1 = s1;
    map.grid = grid;
    map.cells.resize(grid.r_count * grid.s_count);
    parallel_for(map.cells.size(), [&](std::size_t idx) {
        BiRegionCell& cell = map.cells[idx];
        cell.r = grid.r_at(idx % grid.r_count);
        cell.s = grid.s_at(idx / grid.r_count);
        const Model m2 = with_second_param(with_r(tmpl, cell.r), cell.s);
        try {
            (void)find_limit_cycle(m2, copts);
            const BasinBoundary theta = threshold_covering(m2, base);
            const BasinClassification bc = classify_basin_instability(base, theta, opts);
            cell.cls = bc.cls;
            cell.d_min = bc.d_min;
            const PhaseInterval iv = interval_of(bc, base);
            if (!iv.empty) {
                cell.phi_minus = iv.lo;
                cell.phi_plus = iv.hi();
            }
        } catch (const NoCycleError&) {
            cell.reason = "no cycle";
        } catch (const NotBistable&) {
            cell.reason = "not bistable";
        } catch (const ManifoldFailure&) {
            cell.reason = "threshold failed";
        } catch (const ResolutionError&) {
            cell.reason = "unresolved";
        } catch (const IntegrationError&) {
            cell.reason = "integration failed";
        }
    });
    return map;
}

std::size_t GStripPartition::unstable_count() const {
    return static_cast<std::size_t>(std::count(unstable.begin(), unstable.end(), true));
}

double GStripPartition::distance_to_strip(const State& x) const {
    double best = std::numeric_limits<double>::infinity();
    for (const auto& p : points) best = std::min(best, scaled_distance(p, x));
    return best;
}

bool GStripPartition::unstable_at(const State& x) const {
    if (!boundary) throw PreconditionError("partition has no boundary");
    return !in_basin_resolved(x, *boundary);
}

BasinBoundary family_threshold(const CycleFamily& family, ThresholdOptions opts) {
    if (family.cycles.empty()) throw PreconditionError("family_threshold: empty family");
    const Model& m2 = family.cycles.front().model;
    double max_N = 0.0, max_P = 0.0;
    for (const auto& c : family.cycles) {
        const auto [lo, hi] = c.envelope();
        (void)lo;
        max_N = std::max(max_N, hi.N);
        max_P = std::max(max_P, hi.P);
    }
    const double c = std::visit([](const auto& p) { return p.c; }, m2);
    double P3 = 0.0;
    try {
        P3 = coexistence_equilibrium(m2).P;
    } catch (const CoexistenceUndefined& e) {
        throw NotBistable(std::string("no coexistence equilibrium: ") + e.what());
    }
    if (opts.box_N <= 0.0) opts.box_N = std::max(1.2 * family.cycles.back().r() / c, 1.2 * max_N);
    if (opts.box_P <= 0.0) opts.box_P = std::max(20.0 * P3, 1.2 * max_P);
    return allee_threshold(m2, opts);
}

GStripPartition g_strip_partition(const CycleFamily& family, const BasinBoundary& boundary) {
    GStripPartition g;
    g.boundary = std::make_shared<const BasinBoundary>(boundary);
    g.r2 = family.r2;
    g.r1 = family.r1;
    for (const auto& c : family.cycles) {
        for (const auto& s : c.samples) {
            g.points.push_back(s);
            g.r.push_back(c.r());
        }
    }
    std::vector<char> flags(g.points.size(), 0);
    parallel_for(g.points.size(), [&](std::size_t i) {
        flags[i] = in_basin_resolved(g.points[i], boundary) ? 0 : 1;
    });
    g.unstable.assign(flags.begin(), flags.end());
    return g;
}

}  // namespace ptip
