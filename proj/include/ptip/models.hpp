#pragma once

// Frozen (fixed-r) Rosenzweig-MacArthur and May predator-prey vector fields.

#include <array>
#include <complex>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "ptip/ode.hpp"
#include "ptip/state.hpp"

namespace ptip {

/// Rosenzweig-MacArthur with a strong Allee effect in the prey.
struct RmaParams {
    double r = 2.47;     // 1/yr
    double c = 0.19;     // ha/(prey yr)
    double alpha = 800;  // prey/(pred yr)
    double beta = 1.5;   // prey/ha
    double chi = 0.004;  // pred/prey
    double delta = 2.2;  // 1/yr
    double mu = 0.03;    // prey/ha
    double nu = 0.003;   // prey/ha
};

/// Leslie-Gower-May predator with the same Allee prey equation.
struct MayParams {
    double r = 2.0;
    double c = 0.22;
    double alpha = 505;
    double beta = 0.3;
    double s = 0.85;      // 1/yr
    double q = 205;       // prey/pred
    double mu = 0.03;
    double nu = 0.003;
    double epsilon = 0.031;
};

using Model = std::variant<RmaParams, MayParams>;

enum class Family { Rma, May };

/// Lynx-hare presets: "rma-lynx-hare" and "may-lynx-hare".
Model preset_model(const std::string& name);

Family family_of(const Model& m);
std::string family_name(const Model& m);
double r_of(const Model& m);
Model with_r(Model m, double r);
/// The second bifurcation parameter: delta (RMA) or q (May).
double second_param(const Model& m);
Model with_second_param(Model m, double value);
const char* second_param_name(const Model& m);

State vector_field(const RmaParams& p, const State& x);
State vector_field(const MayParams& p, const State& x);
State vector_field(const Model& m, const State& x);

/// A closure over a copy of the parameters.
VectorField field_of(const Model& m);

using Mat2 = std::array<std::array<double, 2>, 2>;

Mat2 jacobian(const RmaParams& p, const State& x);
Mat2 jacobian(const MayParams& p, const State& x);
Mat2 jacobian(const Model& m, const State& x);

std::array<std::complex<double>, 2> eigenvalues(const Mat2& j);

enum class StabilityClass {
    StableNode,
    StableFocus,
    Saddle,
    UnstableNode,
    UnstableFocus,
    NonHyperbolic
};

const char* to_string(StabilityClass c);
bool is_attracting(StabilityClass c);

struct Stability {
    StabilityClass cls = StabilityClass::NonHyperbolic;
    std::array<std::complex<double>, 2> eigenvalues{};
};

/// Eigenvalue-based classification; |Re| below 1e-7 counts as nonhyperbolic.
/// Throws PreconditionError if x is not an equilibrium to residual 1e-8.
Stability classify_stability(const Model& m, const State& x);

struct Equilibrium {
    std::string label;  // e0 .. e4
    State x;
    Stability stability;
    /// False when a coordinate is negative; such points are reported but never
    /// enter attractor catalogs.
    bool ecological = true;
};

using EquilibriumSet = std::vector<Equilibrium>;

/// RMA: e0, e1, e2 and (when chi*alpha > delta) e3 in closed form.
/// May: e0 = (0, eps/q), e1, e2, and e3 > e4 from the real roots of the
/// coexistence cubic with P = (N + eps)/q.
EquilibriumSet equilibria(const Model& m);

/// As equilibria, but an undefined RMA e3 is omitted instead of thrown.
EquilibriumSet all_equilibria(const Model& m);

const Equilibrium* find_equilibrium(const EquilibriumSet& set, const std::string& label);

/// Coexistence equilibrium e3; throws CoexistenceUndefined when absent.
State coexistence_equilibrium(const Model& m);

/// The saddle whose stable manifold is the Allee threshold: e2 (RMA) or e4
/// (May). Empty when that equilibrium is missing or not a saddle.
std::optional<Equilibrium> threshold_saddle(const Model& m);

/// Attracting ecological equilibria plus a cycle witness anchored at e3 when
/// e3 exists.
AttractorCatalog attractor_catalog(const Model& m);

/// Coefficients {a2, a1, a0} of the monic May coexistence cubic.
std::array<double, 3> may_cubic_coefficients(const MayParams& p);

/// Real roots of x^3 + a2 x^2 + a1 x + a0, ascending. One root is found by
/// safeguarded Newton on the scaled polynomial, the rest by deflation and the
/// quadratic formula, then all are Newton-polished on the original.
std::vector<double> solve_cubic(double a2, double a1, double a0);

}  // namespace ptip
