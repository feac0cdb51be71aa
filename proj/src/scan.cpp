#include "ptip/scan.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <set>
#include <sstream>

#include "ptip/errors.hpp"
#include "ptip/parallel.hpp"

namespace ptip {

OneParamScan one_param_scan(const Model& tmpl, double r_min, double r_max, double step,
                            const CycleOptions& copts) {
    if (!(step > 0.0)) throw PreconditionError("scan step must be positive");
    if (r_max < r_min) throw PreconditionError("scan range must be ascending");
    const auto n = static_cast<std::size_t>(std::floor((r_max - r_min) / step + 1e-9)) + 1;
    OneParamScan scan;
    scan.points.resize(n);
    parallel_for(n, [&](std::size_t i) {
        ScanPoint& pt = scan.points[i];
        pt.r = r_min + step * static_cast<double>(i);
        const Model m = with_r(tmpl, pt.r);
        pt.equilibria = all_equilibria(m);
        try {
            const LimitCycle c = find_limit_cycle(m, copts);
            pt.envelope = c.envelope();
            pt.period = c.period;
        } catch (const NoCycleError& e) {
            pt.error = e.what();
        } catch (const IntegrationError& e) {
            pt.error = e.what();
        }
    });
    return scan;
}

const char* to_string(BifurcationKind k) {
    return k == BifurcationKind::Hopf ? "hopf" : "cycle_disappearance";
}

double e3_real_part(const Model& m) {
    const State e3 = coexistence_equilibrium(m);
    const auto ev = eigenvalues(jacobian(m, e3));
    return std::max(ev[0].real(), ev[1].real());
}

BifurcationPoint detect_hopf(const Model& tmpl, double lo, double hi, double tol) {
    auto f = [&](double r) { return e3_real_part(with_r(tmpl, r)); };
    double flo = f(lo);
    const double fhi = f(hi);
    if ((flo < 0.0) == (fhi < 0.0)) {
        std::ostringstream msg;
        msg << "Re(lambda(e3)) has no sign change on [" << lo << ", " << hi << "]";
        throw BracketError(msg.str());
    }
    double mid = 0.5 * (lo + hi);
    for (int it = 0; it < 200; ++it) {
        mid = 0.5 * (lo + hi);
        const double fm = f(mid);
        if (hi - lo <= tol && std::abs(fm) < 1e-6) break;
        if ((fm < 0.0) == (flo < 0.0)) {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
        }
    }
    const Model m = with_r(tmpl, mid);
    const auto ev = eigenvalues(jacobian(m, coexistence_equilibrium(m)));
    if (ev[0].imag() == 0.0)
        throw BracketError("eigenvalues at the sign change are real: not a Hopf point");
    return {BifurcationKind::Hopf, mid, lo, hi};
}

bool cycle_exists(const Model& m, const CycleOptions& copts) {
    try {
        (void)find_limit_cycle(m, copts);
        return true;
    } catch (const NoCycleError&) {
        return false;
    }
}

BifurcationPoint detect_cycle_disappearance(const Model& tmpl, double lo, double hi, double tol,
                                            const CycleOptions& copts, std::size_t probes) {
    auto pred = [&](double r) { return cycle_exists(with_r(tmpl, r), copts); };
    const std::size_t n = probes + 2;
    std::vector<char> seen(n);
    parallel_for(n, [&](std::size_t i) {
        seen[i] = pred(lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(n - 1));
    });
    if (!seen.front() || seen.back()) {
        std::ostringstream msg;
        msg << "cycle predicate must hold at " << lo << " and fail at " << hi;
        throw BracketError(msg.str());
    }
    std::size_t flips = 0;
    for (std::size_t i = 0; i + 1 < n; ++i) flips += seen[i] != seen[i + 1];
    if (flips != 1)
        throw AmbiguousBracket("cycle predicate is not monotone on the bracket; scan more finely");
    std::size_t k = 0;
    while (seen[k + 1]) ++k;
    double a = lo + (hi - lo) * static_cast<double>(k) / static_cast<double>(n - 1);
    double b = lo + (hi - lo) * static_cast<double>(k + 1) / static_cast<double>(n - 1);
    while (b - a > tol) {
        const double mid = 0.5 * (a + b);
        (pred(mid) ? a : b) = mid;
    }
    return {BifurcationKind::CycleDisappearance, 0.5 * (a + b), a, b};
}

const char* to_string(RegionLabel l) {
    switch (l) {
        case RegionLabel::OscCoexistOrExtinction: return "osc_coexist_or_extinction";
        case RegionLabel::StatCoexistOrExtinction: return "stat_coexist_or_extinction";
        case RegionLabel::PreyOnlyOrExtinction: return "prey_only_or_extinction";
        case RegionLabel::ExtinctionOnly: return "extinction_only";
        case RegionLabel::Ambiguous: return "ambiguous";
    }
    return "?";
}

std::vector<State> census_probes(const Model& m, double jitter_N, double jitter_P) {
    const double K = r_of(m) / std::visit([](const auto& p) { return p.c; }, m);
    std::vector<State> probes;
    const auto eq = all_equilibria(m);
    const Equilibrium* e3 = find_equilibrium(eq, "e3");
    if (e3 && e3->ecological && e3->x.P > 0.0)
        probes.push_back({e3->x.N + 0.05, e3->x.P});
    else
        probes.push_back({0.5 * K + 0.05, 1e-3});
    probes.push_back({0.99 * K, 1e-5});
    probes.push_back({0.5 * K, 1e-6});
    probes.push_back({3.0, 0.002});
    for (auto& p : probes) {
        p.N *= 1.0 + jitter_N;
        p.P *= 1.0 + jitter_P;
    }
    return probes;
}

CensusResult attractor_census(const Model& m, const std::vector<State>& probes,
                              const IntegratorConfig& cfg) {
    const VectorField f = field_of(m);
    const AttractorCatalog cat = attractor_catalog(m);
    CensusResult res;
    bool undecided = false;
    std::set<std::string> found;
    for (const auto& p : probes) {
        const AttractorLabel l = converge_to_attractor(f, p, cfg, cat);
        res.attractors.push_back(l.name);
        if (l.kind == AttractorKind::Undecided)
            undecided = true;
        else
            found.insert(l.name);
    }
    if (undecided)
        res.label = RegionLabel::Ambiguous;
    else if (found.count("cycle"))
        res.label = RegionLabel::OscCoexistOrExtinction;
    else if (found.count("e3"))
        res.label = RegionLabel::StatCoexistOrExtinction;
    else if (found.count("e1"))
        res.label = RegionLabel::PreyOnlyOrExtinction;
    else
        res.label = RegionLabel::ExtinctionOnly;
    return res;
}

RegionMap two_param_region_map(const Model& tmpl, const GridSpec& grid, const IntegratorConfig& cfg,
                               unsigned jitter_seed) {
    grid.validate();
    RegionMap map;
    map.grid = grid;
    map.cells.resize(grid.r_count * grid.s_count);
    parallel_for(map.cells.size(), [&](std::size_t idx) {
        RegionCell& cell = map.cells[idx];
        cell.r = grid.r_at(idx % grid.r_count);
        cell.s = grid.s_at(idx / grid.r_count);
        const Model m = with_second_param(with_r(tmpl, cell.r), cell.s);
        double jn = 0.0, jp = 0.0;
        if (jitter_seed != 0) {
            std::mt19937_64 rng(jitter_seed ^ idx);
            std::uniform_real_distribution<double> u(-0.01, 0.01);
            jn = u(rng);
            jp = u(rng);
        }
        try {
            const CensusResult c = attractor_census(m, census_probes(m, jn, jp), cfg);
            cell.label = c.label;
            std::set<std::string> distinct(c.attractors.begin(), c.attractors.end());
            for (const auto& a : distinct) cell.attractors += (cell.attractors.empty() ? "" : "+") + a;
        } catch (const IntegrationError& e) {
            cell.label = RegionLabel::Ambiguous;
            cell.attractors = "error";
        }
    });
    return map;
}

}  // namespace ptip
