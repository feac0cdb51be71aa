#pragma once

// Experiment configuration: JSON files layered over built-in figure presets,
// with dotted-path overrides and strict key checking.

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "ptip/basins.hpp"
#include "ptip/tipping.hpp"

namespace ptip {

struct SimulateSection {
    std::size_t run = 0;
    double sample_dt = 0.1;  // yr
};

struct MeasureSection {
    std::size_t J = 10000;
    double T = 100.0;
    double eps = 0.1;
    std::size_t bins = 64;
    std::size_t curve_points = 630;
};

struct BasinSection {
    std::optional<double> r1;  // classify Gamma(r1) against theta(model r)
    ClassifyOptions classify{};
};

struct BiregionSection {
    double r1 = 2.47;
    double s1 = 2.2;
    GridSpec grid{};
    double path_step = 0.01;
    std::optional<std::array<double, 2>> marginal_bracket;
    ClassifyOptions classify{};
};

struct GstripSection {
    double r2 = 1.6;
    double r1 = 2.5;
    double step = 0.01;
    bool records = false;  // also run the Monte Carlo experiment and flag its states
};

struct Scan1dSection {
    double r_min = 0.0;
    double r_max = 3.0;
    double step = 0.01;
    std::vector<std::array<double, 2>> hopf;
    std::vector<std::array<double, 2>> disappearance;
};

struct RegionmapSection {
    GridSpec grid{};
    unsigned jitter_seed = 0;
};

struct MontecarloSection {
    bool measure = false;         // write the invariant-measure reference
    bool example_series = false;  // write the time series of the first tipped run
};

struct RunConfig {
    std::string preset;
    std::string command;  // the preset's intended subcommand, if any
    ExperimentConfig experiment;  // model, climate (seed inside), integrator
    SimulateSection simulate;
    MeasureSection measure;
    BasinSection basin;
    BiregionSection biregion;
    GstripSection gstrip;
    Scan1dSection scan1d;
    RegionmapSection regionmap;
    MontecarloSection montecarlo;
    nlohmann::json snapshot;  // fully resolved tree
};

std::vector<std::string> preset_names();

/// The overlay a preset applies to the defaults; throws ConfigError for an
/// unknown name.
nlohmann::json preset_json(const std::string& name);

/// Every key with its default value.
nlohmann::json default_config_json();

/// Layer defaults, preset (flag wins over the file's "preset" key), the file,
/// then "a.b=value" overrides and the seed. Throws ConfigError naming the key.
RunConfig load_config(const std::optional<std::string>& path,
                      const std::optional<std::string>& preset = std::nullopt,
                      const std::vector<std::string>& overrides = {},
                      std::optional<std::uint64_t> seed = std::nullopt);

/// Resolve an already merged JSON tree into a typed configuration.
RunConfig resolve_config(const nlohmann::json& tree);

}  // namespace ptip
