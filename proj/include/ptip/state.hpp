#pragma once

#include <cmath>

namespace ptip {

/// Predator densities are about three orders of magnitude below prey
/// densities, so every distance and angle in the library weights dP by this.
inline constexpr double kPredatorScale = 1e3;

/// Population state: prey N (prey/ha) and predator P (pred/ha).
struct State {
    double N = 0.0;
    double P = 0.0;

    constexpr State& operator+=(const State& o) {
        N += o.N;
        P += o.P;
        return *this;
    }
    constexpr State& operator-=(const State& o) {
        N -= o.N;
        P -= o.P;
        return *this;
    }
    constexpr State& operator*=(double s) {
        N *= s;
        P *= s;
        return *this;
    }

    friend constexpr State operator+(State a, const State& b) { return a += b; }
    friend constexpr State operator-(State a, const State& b) { return a -= b; }
    friend constexpr State operator*(double s, State a) { return a *= s; }
    friend constexpr State operator*(State a, double s) { return a *= s; }
    friend constexpr bool operator==(const State&, const State&) = default;

    bool finite() const { return std::isfinite(N) && std::isfinite(P); }
};

/// Euclidean norm of (dN, 1e3 dP).
inline double scaled_norm(const State& d) { return std::hypot(d.N, kPredatorScale * d.P); }

inline double scaled_distance(const State& a, const State& b) { return scaled_norm(a - b); }

/// Map to / from the scaled plane where (N, 1e3 P) is isotropic.
inline State to_scaled(const State& x) { return {x.N, kPredatorScale * x.P}; }
inline State from_scaled(const State& x) { return {x.N, x.P / kPredatorScale}; }

}  // namespace ptip
