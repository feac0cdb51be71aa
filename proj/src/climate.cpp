#include "ptip/climate.hpp"

#include <algorithm>
#include <cmath>

#include "ptip/errors.hpp"

namespace ptip {

void ClimateConfig::validate() const {
    if (!std::isfinite(r_low) || !std::isfinite(r_high) || r_low > r_high)
        throw ConfigError("climate.r_low", "climate.r_low must not exceed climate.r_high");
    if (!(r_low >= 0.0)) throw ConfigError("climate.r_low", "climate.r_low must be >= 0");
    if (!(rho > 0.0 && rho < 1.0))
        throw ConfigError("climate.rho", "climate.rho must lie in the open interval (0, 1)");
    if (!(horizon > 0.0)) throw ConfigError("climate.horizon", "climate.horizon must be > 0");
}

std::size_t ClimateSignal::index_at(double t) const {
    if (epochs.empty() || t < 0.0 || t > end())
        throw RangeError("time " + std::to_string(t) + " outside the signal coverage");
    auto it = std::upper_bound(epochs.begin(), epochs.end(), t,
                               [](double v, const Epoch& e) { return v < e.start; });
    return static_cast<std::size_t>(it - epochs.begin()) - 1;
}

double ClimateSignal::value_at(double t) const { return epochs[index_at(t)].r; }

std::mt19937_64 make_stream(std::uint64_t seed, std::uint64_t stream) {
    return std::mt19937_64(seed ^ stream);
}

int sample_duration(std::mt19937_64& rng, double rho, DurationConvention convention) {
    // Both readings draw the number of failures before the first success; the
    // shifted law counts the success year itself, the literal one maps l to l + 1.
    std::geometric_distribution<int> failures(rho);
    (void)convention;
    return failures(rng) + 1;
}

double duration_pmf(int l, double rho, DurationConvention convention) {
    if (convention == DurationConvention::Shifted)
        return l >= 1 ? std::pow(1.0 - rho, l - 1) * rho : 0.0;
    return l >= 0 ? std::pow(1.0 - rho, l) * rho : 0.0;
}

ClimateSignal sample_signal(const ClimateConfig& cfg, std::uint64_t stream) {
    cfg.validate();
    std::mt19937_64 rng = make_stream(cfg.seed, stream);
    std::uniform_real_distribution<double> amplitude(cfg.r_low, cfg.r_high);
    ClimateSignal sig;
    double t = 0.0;
    while (t <= cfg.horizon) {
        Epoch e;
        e.start = t;
        e.r = cfg.r_low == cfg.r_high ? cfg.r_low : amplitude(rng);
        e.duration = sample_duration(rng, cfg.rho, cfg.convention);
        sig.epochs.push_back(e);
        t = e.end();
    }
    return sig;
}

EpochType epoch_type(double r, const ClimateConfig& cfg) {
    return r > cfg.mean() ? EpochType::H : EpochType::L;
}

EpochType epoch_type(const Epoch& e, const ClimateConfig& cfg) { return epoch_type(e.r, cfg); }

const char* to_string(EpochType t) { return t == EpochType::H ? "H" : "L"; }

}  // namespace ptip
