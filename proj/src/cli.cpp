#include "ptip/cli.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>

#include <CLI11.hpp>
#include <openssl/evp.h>

#include "ptip/basins.hpp"
#include "ptip/climate.hpp"
#include "ptip/config.hpp"
#include "ptip/csv.hpp"
#include "ptip/cycles.hpp"
#include "ptip/errors.hpp"
#include "ptip/models.hpp"
#include "ptip/scan.hpp"
#include "ptip/tipping.hpp"

#ifndef PTIP_VERSION
#define PTIP_VERSION "0.0.0"
#endif

namespace ptip {

namespace fs = std::filesystem;
using nlohmann::json;

std::string sha256_hex(const std::string& bytes) {
    unsigned char digest[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    if (EVP_Digest(bytes.data(), bytes.size(), digest, &len, EVP_sha256(), nullptr) != 1)
        throw Error("SHA-256 digest failed");
    std::ostringstream out;
    for (unsigned int i = 0; i < len; ++i)
        out << std::hex << std::setw(2) << std::setfill('0') << static_cast<int>(digest[i]);
    return out.str();
}

namespace {

const std::vector<std::string> kCommands = {"simulate", "equilibria", "cycle",      "measure",
                                            "basin",    "biregion",   "gstrip",     "montecarlo",
                                            "scan1d",   "regionmap"};

/// Outputs collected in memory and written once the command has succeeded.
class Outputs {
public:
    void add(const std::string& name, const CsvWriter& csv) { files_.emplace_back(name, csv.text()); }
    void error(json entry) { errors_.push_back(std::move(entry)); }

    void write(const fs::path& dir, const RunConfig& rc, const std::string& command) const {
        fs::create_directories(dir);
        json outputs = json::array();
        for (const auto& [name, text] : files_) {
            write_atomic(dir / name, text);
            outputs.push_back({{"path", name}, {"bytes", text.size()}, {"sha256", sha256_hex(text)}});
        }
        const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
        std::ostringstream stamp;
        stamp << std::put_time(std::gmtime(&now), "%Y-%m-%dT%H:%M:%SZ");
        json manifest = {{"schema_version", kSchemaVersion},
                         {"artifact_version", PTIP_VERSION},
                         {"command", command},
                         {"seed", rc.experiment.climate.seed},
                         {"config", rc.snapshot},
                         {"outputs", outputs},
                         {"errors", errors_},
                         {"created_utc", stamp.str()}};
        write_atomic(dir / "manifest.json", manifest.dump(2) + "\n");
    }

private:
    static void write_atomic(const fs::path& path, const std::string& text) {
        fs::path tmp = path;
        tmp += ".tmp";
        {
            std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
            if (!f) throw Error("cannot write " + tmp.string());
            f << text;
            if (!f) throw Error("write failed for " + tmp.string());
        }
        fs::rename(tmp, path);
    }

    std::vector<std::pair<std::string, std::string>> files_;
    json errors_ = json::array();
};

CycleOptions cycle_options(const RunConfig& rc) {
    CycleOptions o;
    o.integrator = rc.experiment.integrator;
    return o;
}

std::string outcome_kind(const RunResult& r) {
    return r.record ? to_string(r.record->kind) : "";
}

void write_cycle(Outputs& out, const std::string& name, const LimitCycle& cycle) {
    CsvWriter csv({"t", "N", "P"});
    for (std::size_t i = 0; i < cycle.samples.size(); ++i)
        csv.cell(static_cast<double>(i) * cycle.dt()).cell(cycle.samples[i].N).cell(cycle.samples[i].P).end_row();
    out.add(name, csv);
}

void write_polyline(Outputs& out, const std::string& name, const BasinBoundary& b) {
    CsvWriter csv({"N", "P"});
    for (const auto& x : b.polyline()) csv.cell(x.N).cell(x.P).end_row();
    out.add(name, csv);
}

void write_signal(Outputs& out, const std::string& name, const ClimateSignal& sig, const ClimateConfig& cfg) {
    CsvWriter csv({"start_yr", "duration_yr", "r_value", "type"});
    for (const auto& e : sig.epochs)
        csv.cell(e.start).cell(e.duration).cell(e.r).cell(to_string(epoch_type(e, cfg))).end_row();
    out.add(name, csv);
}

void write_series(Outputs& out, const std::string& name, const std::vector<TimeSample>& series) {
    CsvWriter csv({"t_yr", "r", "N", "P"});
    for (const auto& s : series) csv.cell(s.t).cell(s.r).cell(s.x.N).cell(s.x.P).end_row();
    out.add(name, csv);
}

CsvWriter records_csv(const std::vector<TippingRecord>& records) {
    CsvWriter csv({"run", "t1_yr", "r_pre", "r_post", "N_b", "P_b", "phi_b", "kind", "rescues", "converged_pre"});
    for (const auto& r : records)
        csv.cell(r.run).cell(r.t1).cell(r.r_pre).cell(r.r_post).cell(r.x_b.N).cell(r.x_b.P).cell(r.phi_xb)
            .cell(to_string(r.kind)).cell(r.rescues).cell(r.converged_pre).end_row();
    return csv;
}

CsvWriter runs_csv(const MonteCarloResult& mc) {
    CsvWriter csv({"run", "outcome", "kind", "t_end_yr", "rescues", "error"});
    for (const auto& r : mc.runs)
        csv.cell(r.run).cell(to_string(r.outcome)).cell(outcome_kind(r)).cell(r.t_end).cell(r.rescues)
            .cell(r.error.empty() ? "" : "see manifest").end_row();
    return csv;
}

void add_run_errors(Outputs& out, const MonteCarloResult& mc) {
    for (const auto& r : mc.runs)
        if (r.outcome == RunOutcome::Failed) out.error({{"run", r.run}, {"error", r.error}});
}

void cmd_equilibria(const RunConfig& rc, Outputs& out) {
    const Model& m = rc.experiment.model;
    CsvWriter csv({"r", "label", "N", "P", "stability", "re1", "im1", "re2", "im2", "ecological"});
    for (const auto& e : all_equilibria(m)) {
        const auto& ev = e.stability.eigenvalues;
        csv.cell(r_of(m)).cell(e.label).cell(e.x.N).cell(e.x.P).cell(to_string(e.stability.cls))
            .cell(ev[0].real()).cell(ev[0].imag()).cell(ev[1].real()).cell(ev[1].imag()).cell(e.ecological).end_row();
    }
    out.add("equilibria.csv", csv);
}

void cmd_cycle(const RunConfig& rc, Outputs& out) {
    const LimitCycle cycle = find_limit_cycle(rc.experiment.model, cycle_options(rc));
    write_cycle(out, "cycle.csv", cycle);
    CsvWriter summary({"r", "period_yr", "closure_error", "N3", "P3"});
    summary.cell(cycle.r()).cell(cycle.period).cell(cycle.closure_error).cell(cycle.anchor.N).cell(cycle.anchor.P).end_row();
    out.add("cycle_summary.csv", summary);
}

void cmd_measure(const RunConfig& rc, Outputs& out) {
    const LimitCycle cycle = find_limit_cycle(rc.experiment.model, cycle_options(rc));
    const auto& ms = rc.measure;
    const InvariantMeasure mu = invariant_measure(cycle, ms.J, ms.T, ms.eps, rc.experiment.integrator);
    CsvWriter curve({"phi", "mu"});
    for (const auto& [phi, v] : mu.curve(ms.curve_points)) curve.cell(phi).cell(v).end_row();
    out.add("measure.csv", curve);
    CsvWriter hist({"phi_lo", "phi_hi", "mass"});
    const auto h = mu.histogram(ms.bins);
    for (std::size_t i = 0; i < h.size(); ++i)
        hist.cell(kTwoPi * i / h.size()).cell(kTwoPi * (i + 1) / h.size()).cell(h[i]).end_row();
    out.add("measure_hist.csv", hist);
    write_cycle(out, "cycle.csv", cycle);
}

CsvWriter classification_header() {
    return CsvWriter({"r1", "r2", "class", "phi_minus", "phi_plus", "d_min", "d_max", "outside_fraction"});
}

void cmd_basin(const RunConfig& rc, Outputs& out) {
    const Model& m = rc.experiment.model;
    cmd_equilibria(rc, out);
    std::optional<LimitCycle> cycle;
    try {
        cycle = find_limit_cycle(m, cycle_options(rc));
        write_cycle(out, "cycle.csv", *cycle);
    } catch (const NoCycleError& e) {
        out.error({{"stage", "cycle"}, {"error", e.what()}});
    }
    if (!rc.basin.r1) {
        const BasinBoundary theta = cycle ? threshold_covering(m, *cycle) : allee_threshold(m);
        write_polyline(out, "threshold.csv", theta);
        return;
    }
    const LimitCycle base = find_limit_cycle(with_r(m, *rc.basin.r1), cycle_options(rc));
    const BasinBoundary theta = threshold_covering(m, base);
    write_polyline(out, "threshold.csv", theta);
    write_cycle(out, "cycle_r1.csv", base);
    const BasinClassification bc = classify_basin_instability(base, theta, rc.basin.classify);
    const PhaseInterval iv = unstable_phase_interval(base, theta, rc.basin.classify);
    CsvWriter csv = classification_header();
    csv.cell(base.r()).cell(r_of(m)).cell(to_string(bc.cls)).cell(iv.empty ? NAN : iv.lo)
        .cell(iv.empty ? NAN : iv.hi()).cell(bc.d_min).cell(bc.d_max).cell(bc.outside_fraction).end_row();
    out.add("classification.csv", csv);
}

CsvWriter biregion_csv(const BiRegionMap& map, const Model& m) {
    const std::string s = second_param_name(m);
    CsvWriter csv({"r1", s + "1", "r2", s + "2", "class", "reason", "d_min", "phi_minus", "phi_plus"});
    for (const auto& c : map.cells) {
        const bool has_iv = c.cls && (*c.cls == BasinClass::Partial || *c.cls == BasinClass::AlmostTotal ||
                                      *c.cls == BasinClass::Marginal);
        csv.cell(map.r1).cell(map.s1).cell(c.r).cell(c.s).cell(c.cls ? to_string(*c.cls) : "na").cell(c.reason)
            .cell(c.cls ? c.d_min : NAN).cell(has_iv ? c.phi_minus : NAN).cell(has_iv ? c.phi_plus : NAN).end_row();
    }
    return csv;
}

void cmd_biregion(const RunConfig& rc, Outputs& out) {
    const auto& b = rc.biregion;
    const Model& m = rc.experiment.model;
    const CycleOptions copts = cycle_options(rc);
    const BiRegionMap map = bi_region_map(m, b.r1, b.s1, b.grid, copts, b.classify);
    out.add("biregion.csv", biregion_csv(map, m));

    GridSpec path;
    path.r_min = b.grid.r_min;
    path.r_max = b.r1;
    path.r_count = static_cast<std::size_t>(std::llround((b.r1 - b.grid.r_min) / b.path_step)) + 1;
    path.s_min = path.s_max = b.s1;
    path.s_count = 1;
    if (path.r_max > path.r_min) out.add("biregion_path.csv", biregion_csv(bi_region_map(m, b.r1, b.s1, path, copts, b.classify), m));

    const Model m1 = with_second_param(with_r(m, b.r1), b.s1);
    const LimitCycle base = find_limit_cycle(m1, copts);
    write_cycle(out, "cycle_r1.csv", base);
    if (b.marginal_bracket) {
        const auto [lo, hi] = *b.marginal_bracket;
        const double r2 = marginal_r2(base, lo, hi);
        CsvWriter summary({"kind", "value", "lo", "hi"});
        summary.cell("marginal_r2").cell(r2).cell(lo).cell(hi).end_row();
        out.add("marginal.csv", summary);
        CsvWriter thresholds({"r2", "N", "P"});
        CsvWriter cls = classification_header();
        for (double r : {lo, r2, hi}) {
            const BasinBoundary theta = threshold_covering(with_r(m1, r), base);
            for (const auto& x : theta.polyline()) thresholds.cell(r).cell(x.N).cell(x.P).end_row();
            const BasinClassification bc = classify_basin_instability(base, theta, b.classify);
            const PhaseInterval iv = unstable_phase_interval(base, theta, b.classify);
            cls.cell(b.r1).cell(r).cell(to_string(bc.cls)).cell(iv.empty ? NAN : iv.lo).cell(iv.empty ? NAN : iv.hi())
                .cell(bc.d_min).cell(bc.d_max).cell(bc.outside_fraction).end_row();
        }
        out.add("thresholds.csv", thresholds);
        out.add("classification.csv", cls);
    }
}

MonteCarloResult write_montecarlo(const RunConfig& rc, const TippingContext& ctx, Outputs& out) {
    const MonteCarloResult mc = run_monte_carlo(ctx);
    add_run_errors(out, mc);
    out.add("records.csv", records_csv(mc.records));
    out.add("runs.csv", runs_csv(mc));

    const HistogramBundle& h = mc.histograms;
    CsvWriter phase({"phi_lo", "phi_hi", "count_B", "count_P"});
    for (std::size_t i = 0; i < h.phase_B.size(); ++i)
        phase.cell(h.phase_edges[i]).cell(h.phase_edges[i + 1]).cell(h.phase_B[i]).cell(h.phase_P[i]).end_row();
    out.add("hist_phase.csv", phase);
    CsvWriter time({"t_lo_yr", "t_hi_yr", "count"});
    for (std::size_t i = 0; i < h.time_counts.size(); ++i)
        time.cell(h.time_edges[i]).cell(h.time_edges[i + 1]).cell(h.time_counts[i]).end_row();
    out.add("hist_time.csv", time);

    const auto& cl = rc.experiment.climate;
    const double width = 0.01;
    const std::size_t nb = std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil((cl.r_high - cl.r_low) / width - 1e-9)));
    std::vector<std::size_t> pre(nb, 0), post(nb, 0);
    auto bin = [&](double r) {
        const double k = std::floor((r - cl.r_low) / width);
        return std::min(nb - 1, static_cast<std::size_t>(std::max(0.0, k)));
    };
    for (const auto& r : mc.records) {
        ++pre[bin(r.r_pre)];
        ++post[bin(r.r_post)];
    }
    CsvWriter rh({"r_lo", "r_hi", "count_pre", "count_post"});
    for (std::size_t i = 0; i < nb; ++i)
        rh.cell(cl.r_low + width * i).cell(std::min(cl.r_high, cl.r_low + width * (i + 1))).cell(pre[i]).cell(post[i]).end_row();
    out.add("hist_r.csv", rh);

    CsvWriter summary({"runs", "tipped", "no_tip", "initial_tip", "unattributed", "failed", "count_B", "count_P", "r_h"});
    std::size_t nB = 0;
    for (const auto& r : mc.records) nB += r.kind == TipKind::B;
    summary.cell(mc.runs.size()).cell(mc.count(RunOutcome::Tipped)).cell(mc.count(RunOutcome::NoTip))
        .cell(mc.count(RunOutcome::InitialTip)).cell(mc.count(RunOutcome::Unattributed)).cell(mc.count(RunOutcome::Failed))
        .cell(nB).cell(mc.records.size() - nB).cell(mc.r_h ? *mc.r_h : NAN).end_row();
    out.add("summary.csv", summary);
    return mc;
}

void cmd_montecarlo(const RunConfig& rc, Outputs& out) {
    const TippingContext ctx(rc.experiment);
    const MonteCarloResult mc = write_montecarlo(rc, ctx, out);

    if (rc.montecarlo.measure) {
        std::vector<TippingRecord> ref;
        for (const auto& r : mc.records)
            if (r.kind == TipKind::B) ref.push_back(r);
        if (ref.empty()) ref = mc.records;
        const auto& ms = rc.measure;
        const auto mix = mixture_measure_histogram(rc.experiment, ref, rc.experiment.phase_bins, ms.J, ms.T, ms.eps);
        CsvWriter csv({"phi_lo", "phi_hi", "mass"});
        for (std::size_t i = 0; i < mix.size(); ++i)
            csv.cell(kTwoPi * i / mix.size()).cell(kTwoPi * (i + 1) / mix.size()).cell(mix[i]).end_row();
        out.add("measure.csv", csv);
    }
    if (rc.montecarlo.example_series && !mc.records.empty()) {
        const std::size_t run = mc.records.front().run;
        std::vector<TimeSample> series;
        (void)run_single_experiment(ctx, run, &series, rc.simulate.sample_dt);
        write_series(out, "series.csv", series);
        write_signal(out, "signal.csv", sample_signal(rc.experiment.climate, run), rc.experiment.climate);
    }
}

void cmd_simulate(const RunConfig& rc, Outputs& out) {
    const TippingContext ctx(rc.experiment);
    const std::size_t run = rc.simulate.run;
    std::vector<TimeSample> series;
    const RunResult res = run_single_experiment(ctx, run, &series, rc.simulate.sample_dt);
    if (res.outcome == RunOutcome::Failed) throw Error("run " + std::to_string(run) + " failed: " + res.error);
    write_series(out, "series.csv", series);
    write_signal(out, "signal.csv", sample_signal(rc.experiment.climate, run), rc.experiment.climate);
    std::vector<TippingRecord> records;
    if (res.record) records.push_back(*res.record);
    out.add("records.csv", records_csv(records));
    CsvWriter csv({"run", "outcome", "kind", "t_end_yr", "rescues"});
    csv.cell(run).cell(to_string(res.outcome)).cell(outcome_kind(res)).cell(res.t_end).cell(res.rescues).end_row();
    out.add("outcome.csv", csv);
}

void cmd_gstrip(const RunConfig& rc, Outputs& out) {
    const auto& g = rc.gstrip;
    const CycleFamily fam = cycle_family(rc.experiment.model, g.r2, g.r1, g.step, cycle_options(rc));
    const BasinBoundary theta = family_threshold(fam);
    const GStripPartition part = g_strip_partition(fam, theta);
    CsvWriter strip({"r", "N", "P", "unstable"});
    for (std::size_t i = 0; i < part.points.size(); ++i)
        strip.cell(part.r[i]).cell(part.points[i].N).cell(part.points[i].P).cell(static_cast<bool>(part.unstable[i])).end_row();
    out.add("gstrip.csv", strip);
    write_polyline(out, "threshold.csv", theta);
    if (!g.records) return;

    const TippingContext ctx(rc.experiment);
    const MonteCarloResult mc = write_montecarlo(rc, ctx, out);
    CsvWriter flags({"run", "N_b", "P_b", "kind", "converged_pre", "in_unstable", "distance_to_strip"});
    for (const auto& r : mc.records)
        flags.cell(r.run).cell(r.x_b.N).cell(r.x_b.P).cell(to_string(r.kind)).cell(r.converged_pre)
            .cell(part.unstable_at(r.x_b)).cell(part.distance_to_strip(r.x_b)).end_row();
    out.add("gstrip_records.csv", flags);
}

void cmd_scan1d(const RunConfig& rc, Outputs& out) {
    const auto& s = rc.scan1d;
    const Model& m = rc.experiment.model;
    const CycleOptions copts = cycle_options(rc);
    const OneParamScan scan = one_param_scan(m, s.r_min, s.r_max, s.step, copts);
    CsvWriter eq({"r", "label", "N", "P", "stability", "ecological"});
    CsvWriter cyc({"r", "N_min", "N_max", "P_min", "P_max", "period_yr"});
    for (const auto& p : scan.points) {
        for (const auto& e : p.equilibria)
            eq.cell(p.r).cell(e.label).cell(e.x.N).cell(e.x.P).cell(to_string(e.stability.cls)).cell(e.ecological).end_row();
        if (p.envelope)
            cyc.cell(p.r).cell(p.envelope->first.N).cell(p.envelope->second.N).cell(p.envelope->first.P)
                .cell(p.envelope->second.P).cell(p.period).end_row();
    }
    out.add("scan1d_equilibria.csv", eq);
    out.add("scan1d_cycles.csv", cyc);
    CsvWriter bif({"kind", "value", "lo", "hi"});
    for (const auto& [lo, hi] : s.hopf) {
        const BifurcationPoint b = detect_hopf(m, lo, hi);
        bif.cell(to_string(b.kind)).cell(b.value).cell(b.lo).cell(b.hi).end_row();
    }
    for (const auto& [lo, hi] : s.disappearance) {
        const BifurcationPoint b = detect_cycle_disappearance(m, lo, hi, 1e-3, copts);
        bif.cell(to_string(b.kind)).cell(b.value).cell(b.lo).cell(b.hi).end_row();
    }
    out.add("bifurcations.csv", bif);
}

void cmd_regionmap(const RunConfig& rc, Outputs& out) {
    const Model& m = rc.experiment.model;
    const RegionMap map = two_param_region_map(m, rc.regionmap.grid, rc.experiment.integrator, rc.regionmap.jitter_seed);
    CsvWriter csv({"r", second_param_name(m), "label", "attractors"});
    for (const auto& c : map.cells) csv.cell(c.r).cell(c.s).cell(to_string(c.label)).cell(c.attractors).end_row();
    out.add("regionmap.csv", csv);
}

void dispatch(const std::string& command, const RunConfig& rc, Outputs& out) {
    if (command == "simulate") return cmd_simulate(rc, out);
    if (command == "equilibria") return cmd_equilibria(rc, out);
    if (command == "cycle") return cmd_cycle(rc, out);
    if (command == "measure") return cmd_measure(rc, out);
    if (command == "basin") return cmd_basin(rc, out);
    if (command == "biregion") return cmd_biregion(rc, out);
    if (command == "gstrip") return cmd_gstrip(rc, out);
    if (command == "montecarlo") return cmd_montecarlo(rc, out);
    if (command == "scan1d") return cmd_scan1d(rc, out);
    if (command == "regionmap") return cmd_regionmap(rc, out);
    throw ConfigError("command", "unknown subcommand: " + command);
}

}  // namespace

int run_command(const std::vector<std::string>& args) {
    CLI::App app{"Phase-tipping experiments on forced predator-prey models", "ptip"};
    app.require_subcommand(1, 1);
    app.set_version_flag("--version", std::string(PTIP_VERSION));

    std::vector<std::string> positional;
    std::vector<std::string> sets;
    std::string preset;
    std::optional<std::uint64_t> seed;
    std::string out_dir;
    for (const auto& name : kCommands) {
        CLI::App* sub = app.add_subcommand(name);
        sub->add_option("args", positional, "config file and key.path=value overrides");
        sub->add_option("--preset", preset, "built-in preset (fig1a ... fig9b)");
        sub->add_option("--seed", seed, "climate seed");
        sub->add_option("--out-dir", out_dir, "output directory (default $PTIP_OUT_DIR or ./out)");
        sub->add_option("--set", sets, "key.path=value override")->take_all();
    }

    try {
        std::vector<std::string> reversed(args.rbegin(), args.rend());
        app.parse(reversed);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? 0 : 2;
    }
    const std::string command = app.get_subcommands().front()->get_name();

    try {
        std::optional<std::string> path;
        std::vector<std::string> overrides;
        for (const auto& a : positional) {
            if (a.find('=') != std::string::npos) {
                overrides.push_back(a);
            } else if (!path) {
                path = a;
            } else {
                throw ConfigError("<args>", "more than one config file given: " + *path + ", " + a);
            }
        }
        overrides.insert(overrides.end(), sets.begin(), sets.end());
        const RunConfig rc =
            load_config(path, preset.empty() ? std::nullopt : std::optional<std::string>(preset), overrides, seed);
        if (!rc.command.empty() && rc.command != command)
            std::cerr << "note: preset " << rc.preset << " is meant for '" << rc.command << "'\n";

        fs::path dir = out_dir;
        if (dir.empty()) {
            const char* env = std::getenv("PTIP_OUT_DIR");
            dir = env && *env ? fs::path(env) : fs::path("out");
        }
        Outputs out;
        dispatch(command, rc, out);
        out.write(dir, rc, command);
        std::cout << "wrote " << (dir / "manifest.json").string() << "\n";
        return 0;
    } catch (const ConfigError& e) {
        std::cerr << "config error [" << e.key << "]: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}

int run_command(int argc, const char* const* argv) {
    std::vector<std::string> args;
    for (int i = 1; i < argc; ++i) args.emplace_back(argv[i]);
    return run_command(args);
}

}  // namespace ptip
