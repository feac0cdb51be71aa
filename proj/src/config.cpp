#include "ptip/config.hpp"

#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

#include "ptip/csv.hpp"
#include "ptip/errors.hpp"

namespace ptip {

using nlohmann::json;

namespace {

const char* kDefaults = R"json({
  "preset": null,
  "command": null,
  "seed": 1,
  "model": {"family": null, "params": {}},
  "climate": {"r_low": 1.6, "r_high": 2.5, "rho": 0.2, "horizon": 5000.0, "convention": "shifted"},
  "integrator": {"rel_tol": 1e-8, "abs_tol_N": 1e-10, "abs_tol_P": 1e-13, "max_step": 0.5, "max_time": 2000.0},
  "experiment": {"x0": [3.0, 0.002], "n_runs": 1000, "r_h": null, "detect_r_h": true,
                 "cache_step": 0.002, "band": 0.001, "converged_tol": 0.01,
                 "phase_bins": 64, "time_bin": 1.0},
  "simulate": {"run": 0, "sample_dt": 0.1},
  "measure": {"J": 10000, "T": 100.0, "eps": 0.1, "bins": 64, "curve_points": 630},
  "basin": {"r1": null, "band": 0.001, "tangency_tol": 0.0001, "marginal_fraction": 0.02,
            "max_indeterminate": 0.01},
  "biregion": {"r1": 2.47, "s1": 2.2,
               "grid": {"r_min": 1.5, "r_max": 2.6, "r_count": 23, "s_min": 1.8, "s_max": 2.6, "s_count": 17},
               "path_step": 0.01, "marginal_bracket": null},
  "gstrip": {"r2": 1.6, "r1": 2.5, "step": 0.01, "records": false},
  "scan1d": {"r_min": 0.0, "r_max": 3.0, "step": 0.01, "hopf": [], "disappearance": []},
  "regionmap": {"grid": {"r_min": 0.0, "r_max": 3.0, "r_count": 150, "s_min": 1.5, "s_max": 3.2, "s_count": 100},
                "jitter_seed": 0},
  "montecarlo": {"measure": false, "example_series": false}
})json";

const std::map<std::string, const char*>& presets() {
    static const std::map<std::string, const char*> table = {
        {"fig1a", R"json({"command": "scan1d", "model": {"family": "rma"},
            "scan1d": {"r_min": 0.0, "r_max": 3.0, "step": 0.01,
                       "hopf": [[1.3, 1.8]], "disappearance": [[2.5, 2.7]]}})json"},
        {"fig1b", R"json({"command": "scan1d", "model": {"family": "may"},
            "scan1d": {"r_min": 0.0, "r_max": 4.0, "step": 0.01,
                       "hopf": [[1.4, 2.0], [3.5, 4.0]], "disappearance": []}})json"},
        {"fig2a", R"json({"command": "basin", "model": {"family": "rma", "params": {"r": 2.47}}})json"},
        {"fig2b", R"json({"command": "basin", "model": {"family": "may", "params": {"r": 2.0, "q": 205}}})json"},
        {"fig3", R"json({"command": "montecarlo", "model": {"family": "rma", "params": {"r": 2.47}},
            "climate": {"r_low": 1.6, "r_high": 2.7, "rho": 0.2},
            "experiment": {"x0": [3.0, 0.002], "n_runs": 1000},
            "measure": {"J": 2000},
            "montecarlo": {"measure": true, "example_series": true}})json"},
        {"fig4", R"json({"command": "montecarlo", "model": {"family": "rma", "params": {"r": 2.47}},
            "climate": {"r_low": 1.6, "r_high": 2.5, "rho": 0.2},
            "experiment": {"x0": [3.0, 0.002], "n_runs": 1000},
            "measure": {"J": 2000},
            "montecarlo": {"measure": true, "example_series": true}})json"},
        {"fig5", R"json({"command": "montecarlo", "model": {"family": "may", "params": {"r": 2.0, "q": 205}},
            "climate": {"r_low": 2.0, "r_high": 3.3, "rho": 0.2},
            "experiment": {"x0": [3.0, 0.002], "n_runs": 1000},
            "measure": {"J": 2000},
            "montecarlo": {"measure": true, "example_series": true}})json"},
        {"fig6a", R"json({"command": "regionmap", "model": {"family": "rma"},
            "regionmap": {"grid": {"r_min": 0.0, "r_max": 3.0, "r_count": 150,
                                   "s_min": 1.5, "s_max": 3.2, "s_count": 100}}})json"},
        {"fig6b", R"json({"command": "regionmap", "model": {"family": "may"},
            "regionmap": {"grid": {"r_min": 0.0, "r_max": 4.0, "r_count": 150,
                                   "s_min": 120.0, "s_max": 280.0, "s_count": 100}}})json"},
        {"fig7", R"json({"command": "biregion", "model": {"family": "rma", "params": {"r": 2.47, "delta": 2.2}},
            "biregion": {"r1": 2.47, "s1": 2.2,
                         "grid": {"r_min": 1.5, "r_max": 2.6, "r_count": 23, "s_min": 1.8, "s_max": 2.6, "s_count": 17},
                         "marginal_bracket": [1.8, 2.05]}})json"},
        {"fig8", R"json({"command": "biregion", "model": {"family": "may", "params": {"r": 3.3, "q": 205}},
            "biregion": {"r1": 3.3, "s1": 205.0,
                         "grid": {"r_min": 1.8, "r_max": 3.4, "r_count": 33, "s_min": 150.0, "s_max": 260.0, "s_count": 23},
                         "marginal_bracket": [2.0, 2.82]}})json"},
        {"fig9a", R"json({"command": "gstrip", "model": {"family": "rma"},
            "climate": {"r_low": 1.6, "r_high": 2.5, "rho": 0.2},
            "gstrip": {"r2": 1.6, "r1": 2.5, "step": 0.01, "records": true}})json"},
        {"fig9b", R"json({"command": "gstrip", "model": {"family": "may", "params": {"q": 205}},
            "climate": {"r_low": 2.0, "r_high": 3.3, "rho": 0.2},
            "gstrip": {"r2": 2.0, "r1": 3.3, "step": 0.01, "records": true}})json"},
    };
    return table;
}

void merge_into(json& base, const json& overlay, const std::string& path) {
    if (!overlay.is_object()) throw ConfigError(path.empty() ? "<root>" : path, (path.empty() ? std::string("configuration") : path) + " must be an object");
    for (const auto& [k, v] : overlay.items()) {
        const std::string key = path.empty() ? k : path + "." + k;
        if (path == "model.params") {
            base[k] = v;
            continue;
        }
        if (!base.contains(k)) throw ConfigError(key, "unknown key: " + key);
        if (base[k].is_object()) {
            if (!v.is_object()) throw ConfigError(key, key + " must be an object");
            merge_into(base[k], v, key);
        } else {
            base[k] = v;
        }
    }
}

json parse_override_value(const std::string& text) {
    try {
        return json::parse(text);
    } catch (const json::parse_error&) {
        return text;
    }
}

json override_overlay(const std::string& assignment) {
    const auto eq = assignment.find('=');
    if (eq == std::string::npos || eq == 0)
        throw ConfigError(assignment, "override must have the form key.path=value: " + assignment);
    const std::string key = assignment.substr(0, eq);
    json leaf = parse_override_value(assignment.substr(eq + 1));
    std::vector<std::string> parts;
    std::stringstream ss(key);
    std::string part;
    while (std::getline(ss, part, '.')) {
        if (part.empty()) throw ConfigError(key, "malformed override key: " + key);
        parts.push_back(part);
    }
    for (auto it = parts.rbegin(); it != parts.rend(); ++it) leaf = json{{*it, leaf}};
    return leaf;
}

const json& at_path(const json& tree, const std::string& dotted) {
    const json* node = &tree;
    std::stringstream ss(dotted);
    std::string part;
    while (std::getline(ss, part, '.')) {
        if (!node->is_object() || !node->contains(part)) throw ConfigError(dotted, "missing key: " + dotted);
        node = &(*node)[part];
    }
    return *node;
}

double get_number(const json& tree, const std::string& key) {
    const json& v = at_path(tree, key);
    if (!v.is_number()) throw ConfigError(key, key + " must be a number");
    return v.get<double>();
}

double get_positive(const json& tree, const std::string& key) {
    const double v = get_number(tree, key);
    if (!(v > 0.0)) throw ConfigError(key, key + " must be > 0");
    return v;
}

std::size_t get_count(const json& tree, const std::string& key, std::size_t min = 0) {
    const json& v = at_path(tree, key);
    if (!v.is_number_integer() || v.get<long long>() < static_cast<long long>(min))
        throw ConfigError(key, key + " must be an integer >= " + std::to_string(min));
    return v.get<std::size_t>();
}

bool get_bool(const json& tree, const std::string& key) {
    const json& v = at_path(tree, key);
    if (!v.is_boolean()) throw ConfigError(key, key + " must be true or false");
    return v.get<bool>();
}

std::optional<double> get_optional(const json& tree, const std::string& key) {
    const json& v = at_path(tree, key);
    if (v.is_null()) return std::nullopt;
    if (!v.is_number()) throw ConfigError(key, key + " must be a number or null");
    return v.get<double>();
}

std::array<double, 2> get_pair(const json& v, const std::string& key) {
    if (!v.is_array() || v.size() != 2 || !v[0].is_number() || !v[1].is_number())
        throw ConfigError(key, key + " must be a pair of numbers");
    return {v[0].get<double>(), v[1].get<double>()};
}

std::vector<std::array<double, 2>> get_pairs(const json& tree, const std::string& key) {
    const json& v = at_path(tree, key);
    if (!v.is_array()) throw ConfigError(key, key + " must be a list of [lo, hi] pairs");
    std::vector<std::array<double, 2>> out;
    for (const auto& e : v) {
        auto p = get_pair(e, key);
        if (!(p[0] < p[1])) throw ConfigError(key, key + " brackets must satisfy lo < hi");
        out.push_back(p);
    }
    return out;
}

GridSpec get_grid(const json& tree, const std::string& key) {
    GridSpec g;
    g.r_min = get_number(tree, key + ".r_min");
    g.r_max = get_number(tree, key + ".r_max");
    g.r_count = get_count(tree, key + ".r_count", 1);
    g.s_min = get_number(tree, key + ".s_min");
    g.s_max = get_number(tree, key + ".s_max");
    g.s_count = get_count(tree, key + ".s_count", 1);
    if (g.r_max < g.r_min) throw ConfigError(key + ".r_max", key + ".r_max must be >= r_min");
    if (g.s_max < g.s_min) throw ConfigError(key + ".s_max", key + ".s_max must be >= s_min");
    return g;
}

template <typename P>
using Field = double P::*;

const std::map<std::string, Field<RmaParams>>& rma_fields() {
    static const std::map<std::string, Field<RmaParams>> f = {
        {"r", &RmaParams::r},         {"c", &RmaParams::c},     {"alpha", &RmaParams::alpha},
        {"beta", &RmaParams::beta},   {"chi", &RmaParams::chi}, {"delta", &RmaParams::delta},
        {"mu", &RmaParams::mu},       {"nu", &RmaParams::nu}};
    return f;
}

const std::map<std::string, Field<MayParams>>& may_fields() {
    static const std::map<std::string, Field<MayParams>> f = {
        {"r", &MayParams::r},       {"c", &MayParams::c},   {"alpha", &MayParams::alpha},
        {"beta", &MayParams::beta}, {"s", &MayParams::s},   {"q", &MayParams::q},
        {"mu", &MayParams::mu},     {"nu", &MayParams::nu}, {"epsilon", &MayParams::epsilon}};
    return f;
}

template <typename P>
void apply_params(P& p, const std::map<std::string, Field<P>>& fields, const json& params) {
    for (const auto& [k, v] : params.items()) {
        const std::string key = "model.params." + k;
        auto it = fields.find(k);
        if (it == fields.end()) throw ConfigError(key, "unknown key: " + key);
        if (!v.is_number()) throw ConfigError(key, key + " must be a number");
        p.*(it->second) = v.template get<double>();
    }
    for (const auto& [k, f] : fields) {
        const double v = p.*f;
        const bool ok = k == "r" ? v >= 0.0 : v > 0.0;
        if (!ok || !std::isfinite(v))
            throw ConfigError("model.params." + k, "model.params." + k + (k == "r" ? " must be >= 0" : " must be > 0"));
    }
}

Model resolve_model(const json& tree) {
    const json& fam = at_path(tree, "model.family");
    if (!fam.is_string()) throw ConfigError("model.family", "model.family must be \"rma\" or \"may\"");
    const std::string name = fam.get<std::string>();
    Model m;
    if (name == "rma" || name == "rma-lynx-hare") {
        RmaParams p;
        apply_params(p, rma_fields(), at_path(tree, "model.params"));
        m = p;
    } else if (name == "may" || name == "may-lynx-hare") {
        MayParams p;
        apply_params(p, may_fields(), at_path(tree, "model.params"));
        m = p;
    } else {
        throw ConfigError("model.family", "model.family must be \"rma\" or \"may\", got \"" + name + "\"");
    }
    return m;
}

}  // namespace

std::vector<std::string> preset_names() {
    std::vector<std::string> names;
    for (const auto& [k, v] : presets()) names.push_back(k);
    return names;
}

json preset_json(const std::string& name) {
    auto it = presets().find(name);
    if (it == presets().end()) {
        std::string known;
        for (const auto& n : preset_names()) known += (known.empty() ? "" : ", ") + n;
        throw ConfigError("preset", "unknown preset \"" + name + "\" (known: " + known + ")");
    }
    return json::parse(it->second);
}

json default_config_json() { return json::parse(kDefaults); }

RunConfig load_config(const std::optional<std::string>& path, const std::optional<std::string>& preset,
                      const std::vector<std::string>& overrides, std::optional<std::uint64_t> seed) {
    json file = json::object();
    if (path) {
        std::ifstream f(*path);
        if (!f) throw ConfigError("<file>", "cannot read config file " + *path);
        std::stringstream ss;
        ss << f.rdbuf();
        const std::string text = ss.str();
        if (text.find_first_not_of(" \t\r\n") != std::string::npos) {
            try {
                file = json::parse(text);
            } catch (const json::parse_error& e) {
                throw ConfigError("<file>", std::string("config is not valid JSON: ") + e.what());
            }
        }
        if (!file.is_object()) throw ConfigError("<root>", "configuration must be a JSON object");
    }

    std::optional<std::string> preset_name = preset;
    if (!preset_name && file.contains("preset") && !file["preset"].is_null()) {
        if (!file["preset"].is_string()) throw ConfigError("preset", "preset must be a string");
        preset_name = file["preset"].get<std::string>();
    }

    json tree = default_config_json();
    if (preset_name) {
        merge_into(tree, preset_json(*preset_name), "");
        tree["preset"] = *preset_name;
    }
    merge_into(tree, file, "");
    if (preset_name) tree["preset"] = *preset_name;
    for (const auto& o : overrides) merge_into(tree, override_overlay(o), "");
    if (seed) tree["seed"] = *seed;
    return resolve_config(tree);
}

RunConfig resolve_config(const json& tree) {
    const bool has_preset = tree.contains("preset") && tree["preset"].is_string();
    const bool has_family = at_path(tree, "model.family").is_string();
    if (!has_preset && !has_family)
        throw ConfigError("preset | model.family", "missing required key: preset | model.family");

    RunConfig rc;
    rc.snapshot = tree;
    if (has_preset) rc.preset = tree["preset"].get<std::string>();
    if (tree["command"].is_string()) rc.command = tree["command"].get<std::string>();

    ExperimentConfig& ex = rc.experiment;
    ex.model = resolve_model(tree);

    const json& seed = at_path(tree, "seed");
    if (!seed.is_number_unsigned() && !(seed.is_number_integer() && seed.get<long long>() >= 0))
        throw ConfigError("seed", "seed must be a nonnegative integer");
    ex.climate.seed = seed.get<std::uint64_t>();
    ex.climate.r_low = get_number(tree, "climate.r_low");
    ex.climate.r_high = get_number(tree, "climate.r_high");
    ex.climate.rho = get_number(tree, "climate.rho");
    ex.climate.horizon = get_number(tree, "climate.horizon");
    const json& conv = at_path(tree, "climate.convention");
    if (conv == "shifted")
        ex.climate.convention = DurationConvention::Shifted;
    else if (conv == "literal")
        ex.climate.convention = DurationConvention::Literal;
    else
        throw ConfigError("climate.convention", "climate.convention must be \"shifted\" or \"literal\"");
    if (!(ex.climate.rho > 0.0 && ex.climate.rho < 1.0))
        throw ConfigError("climate.rho", "climate.rho must lie in the open interval (0, 1), got " +
                                             format_number(ex.climate.rho));
    ex.climate.validate();

    ex.integrator.rel_tol = get_positive(tree, "integrator.rel_tol");
    ex.integrator.abs_tol_N = get_positive(tree, "integrator.abs_tol_N");
    ex.integrator.abs_tol_P = get_positive(tree, "integrator.abs_tol_P");
    ex.integrator.max_step = get_positive(tree, "integrator.max_step");
    ex.integrator.max_time = get_positive(tree, "integrator.max_time");

    const auto x0 = get_pair(at_path(tree, "experiment.x0"), "experiment.x0");
    ex.x0 = {x0[0], x0[1]};
    ex.n_runs = get_count(tree, "experiment.n_runs", 1);
    ex.r_h = get_optional(tree, "experiment.r_h");
    ex.detect_r_h = get_bool(tree, "experiment.detect_r_h");
    ex.cache_step = get_positive(tree, "experiment.cache_step");
    ex.band = get_positive(tree, "experiment.band");
    ex.converged_tol = get_positive(tree, "experiment.converged_tol");
    ex.phase_bins = get_count(tree, "experiment.phase_bins", 1);
    ex.time_bin = get_positive(tree, "experiment.time_bin");
    ex.validate();

    rc.simulate.run = get_count(tree, "simulate.run");
    rc.simulate.sample_dt = get_positive(tree, "simulate.sample_dt");

    rc.measure.J = get_count(tree, "measure.J", 100);
    rc.measure.T = get_positive(tree, "measure.T");
    rc.measure.eps = get_positive(tree, "measure.eps");
    rc.measure.bins = get_count(tree, "measure.bins", 1);
    rc.measure.curve_points = get_count(tree, "measure.curve_points", 1);

    ClassifyOptions co;
    co.band = get_positive(tree, "basin.band");
    co.tangency_tol = get_positive(tree, "basin.tangency_tol");
    co.marginal_fraction = get_number(tree, "basin.marginal_fraction");
    co.max_indeterminate = get_number(tree, "basin.max_indeterminate");
    if (co.marginal_fraction < 0.0 || co.marginal_fraction >= 0.5)
        throw ConfigError("basin.marginal_fraction", "basin.marginal_fraction must lie in [0, 0.5)");
    if (co.max_indeterminate < 0.0 || co.max_indeterminate > 1.0)
        throw ConfigError("basin.max_indeterminate", "basin.max_indeterminate must lie in [0, 1]");
    rc.basin.r1 = get_optional(tree, "basin.r1");
    rc.basin.classify = co;

    rc.biregion.r1 = get_number(tree, "biregion.r1");
    rc.biregion.s1 = get_positive(tree, "biregion.s1");
    rc.biregion.grid = get_grid(tree, "biregion.grid");
    rc.biregion.path_step = get_positive(tree, "biregion.path_step");
    const json& mb = at_path(tree, "biregion.marginal_bracket");
    if (!mb.is_null()) {
        rc.biregion.marginal_bracket = get_pair(mb, "biregion.marginal_bracket");
        if (!((*rc.biregion.marginal_bracket)[0] < (*rc.biregion.marginal_bracket)[1]))
            throw ConfigError("biregion.marginal_bracket", "biregion.marginal_bracket must satisfy lo < hi");
    }
    rc.biregion.classify = co;

    rc.gstrip.r2 = get_number(tree, "gstrip.r2");
    rc.gstrip.r1 = get_number(tree, "gstrip.r1");
    rc.gstrip.step = get_positive(tree, "gstrip.step");
    rc.gstrip.records = get_bool(tree, "gstrip.records");
    if (!(rc.gstrip.r2 < rc.gstrip.r1)) throw ConfigError("gstrip.r2", "gstrip.r2 must be < gstrip.r1");

    rc.scan1d.r_min = get_number(tree, "scan1d.r_min");
    rc.scan1d.r_max = get_number(tree, "scan1d.r_max");
    rc.scan1d.step = get_positive(tree, "scan1d.step");
    if (rc.scan1d.r_max < rc.scan1d.r_min) throw ConfigError("scan1d.r_max", "scan1d.r_max must be >= scan1d.r_min");
    rc.scan1d.hopf = get_pairs(tree, "scan1d.hopf");
    rc.scan1d.disappearance = get_pairs(tree, "scan1d.disappearance");

    rc.regionmap.grid = get_grid(tree, "regionmap.grid");
    rc.regionmap.jitter_seed = static_cast<unsigned>(get_count(tree, "regionmap.jitter_seed"));

    rc.montecarlo.measure = get_bool(tree, "montecarlo.measure");
    rc.montecarlo.example_series = get_bool(tree, "montecarlo.example_series");
    return rc;
}

}  // namespace ptip
