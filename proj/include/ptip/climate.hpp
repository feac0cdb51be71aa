#pragma once

// Piecewise-constant stochastic input r(t): uniform amplitudes held for a
// geometric number of whole years.

#include <cstdint>
#include <random>
#include <vector>

namespace ptip {

enum class DurationConvention {
    Shifted,  // P(l) = (1 - rho)^(l - 1) rho on l >= 1
    Literal,  // P(l) = (1 - rho)^l rho on l >= 0, duration l + 1
};

struct ClimateConfig {
    double r_low = 1.6;
    double r_high = 2.5;
    double rho = 0.2;
    std::uint64_t seed = 1;
    double horizon = 5000.0;  // yr
    DurationConvention convention = DurationConvention::Shifted;

    double mean() const { return 0.5 * (r_low + r_high); }
    /// Throws ConfigError naming the offending field.
    void validate() const;
};

enum class EpochType { H, L };

struct Epoch {
    double start = 0.0;  // yr
    int duration = 1;    // whole years
    double r = 0.0;

    double end() const { return start + duration; }
};

struct ClimateSignal {
    std::vector<Epoch> epochs;

    double end() const { return epochs.empty() ? 0.0 : epochs.back().end(); }
    /// Index of the epoch containing t; switch times belong to the new epoch.
    std::size_t index_at(double t) const;
    /// Right-continuous r(t); throws RangeError outside [0, end()].
    double value_at(double t) const;
};

/// The run's generator: 64-bit Mersenne Twister seeded with seed ^ stream.
std::mt19937_64 make_stream(std::uint64_t seed, std::uint64_t stream);

/// Epochs covering [0, cfg.horizon]; deterministic in (cfg, stream).
ClimateSignal sample_signal(const ClimateConfig& cfg, std::uint64_t stream = 0);

/// One duration draw in whole years (always >= 1).
int sample_duration(std::mt19937_64& rng, double rho, DurationConvention convention);

/// Probability of the integer l under the convention's formula.
double duration_pmf(int l, double rho, DurationConvention convention);

/// H iff r is strictly above the interval mean.
EpochType epoch_type(double r, const ClimateConfig& cfg);
EpochType epoch_type(const Epoch& e, const ClimateConfig& cfg);

const char* to_string(EpochType t);

}  // namespace ptip
