#include "ptip/models.hpp"

#include <algorithm>
#include <cmath>

#include "ptip/errors.hpp"

namespace ptip {

Model preset_model(const std::string& name) {
    if (name == "rma-lynx-hare") return RmaParams{};
    if (name == "may-lynx-hare") return MayParams{};
    throw ConfigError("model.preset", "unknown model preset '" + name +
                                          "' (expected rma-lynx-hare or may-lynx-hare)");
}

Family family_of(const Model& m) {
    return std::holds_alternative<RmaParams>(m) ? Family::Rma : Family::May;
}

std::string family_name(const Model& m) { return family_of(m) == Family::Rma ? "rma" : "may"; }

double r_of(const Model& m) {
    return std::visit([](const auto& p) { return p.r; }, m);
}

Model with_r(Model m, double r) {
    std::visit([r](auto& p) { p.r = r; }, m);
    return m;
}

double second_param(const Model& m) {
    if (const auto* p = std::get_if<RmaParams>(&m)) return p->delta;
    return std::get<MayParams>(m).q;
}

Model with_second_param(Model m, double value) {
    if (auto* p = std::get_if<RmaParams>(&m))
        p->delta = value;
    else
        std::get<MayParams>(m).q = value;
    return m;
}

const char* second_param_name(const Model& m) {
    return family_of(m) == Family::Rma ? "delta" : "q";
}

namespace {

// Prey growth N (r - cN)(N - mu)/(nu + N) and its N-derivative.
inline double prey_growth(double r, double c, double mu, double nu, double N) {
    return N * (r - c * N) * (N - mu) / (nu + N);
}

inline double prey_growth_dN(double r, double c, double mu, double nu, double N) {
    const double f = N * (r - c * N);
    const double fp = r - 2.0 * c * N;
    const double h = (N - mu) / (nu + N);
    const double hp = (nu + mu) / ((nu + N) * (nu + N));
    return fp * h + f * hp;
}

}  // namespace

State vector_field(const RmaParams& p, const State& x) {
    const double kill = p.alpha * x.N * x.P / (p.beta + x.N);
    return {prey_growth(p.r, p.c, p.mu, p.nu, x.N) - kill, p.chi * kill - p.delta * x.P};
}

State vector_field(const MayParams& p, const State& x) {
    const double kill = p.alpha * x.N * x.P / (p.beta + x.N);
    return {prey_growth(p.r, p.c, p.mu, p.nu, x.N) - kill,
            p.s * x.P * (1.0 - p.q * x.P / (x.N + p.epsilon))};
}

State vector_field(const Model& m, const State& x) {
    return std::visit([&x](const auto& p) { return vector_field(p, x); }, m);
}

VectorField field_of(const Model& m) {
    return std::visit(
        [](const auto& p) -> VectorField {
            return [p](const State& x) { return vector_field(p, x); };
        },
        m);
}

Mat2 jacobian(const RmaParams& p, const State& x) {
    const double b = p.beta + x.N;
    const double dkill_dN = p.alpha * x.P * p.beta / (b * b);
    const double dkill_dP = p.alpha * x.N / b;
    return {{{prey_growth_dN(p.r, p.c, p.mu, p.nu, x.N) - dkill_dN, -dkill_dP},
             {p.chi * dkill_dN, p.chi * dkill_dP - p.delta}}};
}

Mat2 jacobian(const MayParams& p, const State& x) {
    const double b = p.beta + x.N;
    const double dkill_dN = p.alpha * x.P * p.beta / (b * b);
    const double dkill_dP = p.alpha * x.N / b;
    const double ne = x.N + p.epsilon;
    return {{{prey_growth_dN(p.r, p.c, p.mu, p.nu, x.N) - dkill_dN, -dkill_dP},
             {p.s * p.q * x.P * x.P / (ne * ne), p.s - 2.0 * p.s * p.q * x.P / ne}}};
}

Mat2 jacobian(const Model& m, const State& x) {
    return std::visit([&x](const auto& p) { return jacobian(p, x); }, m);
}

std::array<std::complex<double>, 2> eigenvalues(const Mat2& j) {
    const double tr = j[0][0] + j[1][1];
    const double det = j[0][0] * j[1][1] - j[0][1] * j[1][0];
    const double disc = tr * tr - 4.0 * det;
    if (disc >= 0.0) {
        const double sq = std::sqrt(disc);
        const double big = tr >= 0.0 ? 0.5 * (tr + sq) : 0.5 * (tr - sq);
        const double small = big != 0.0 ? det / big : 0.0;
        std::array<std::complex<double>, 2> ev{std::complex<double>(big), std::complex<double>(small)};
        if (ev[0].real() > ev[1].real()) std::swap(ev[0], ev[1]);
        return ev;
    }
    const double im = 0.5 * std::sqrt(-disc);
    return {std::complex<double>(0.5 * tr, -im), std::complex<double>(0.5 * tr, im)};
}

const char* to_string(StabilityClass c) {
    switch (c) {
        case StabilityClass::StableNode: return "stable_node";
        case StabilityClass::StableFocus: return "stable_focus";
        case StabilityClass::Saddle: return "saddle";
        case StabilityClass::UnstableNode: return "unstable_node";
        case StabilityClass::UnstableFocus: return "unstable_focus";
        case StabilityClass::NonHyperbolic: return "nonhyperbolic";
    }
    return "?";
}

bool is_attracting(StabilityClass c) {
    return c == StabilityClass::StableNode || c == StabilityClass::StableFocus;
}

namespace {

constexpr double kNonHyperbolic = 1e-7;

Stability classify_unchecked(const Model& m, const State& x) {
    Stability s;
    s.eigenvalues = eigenvalues(jacobian(m, x));
    const auto& ev = s.eigenvalues;
    const bool complex_pair = ev[0].imag() != 0.0;
    if (std::abs(ev[0].real()) < kNonHyperbolic || std::abs(ev[1].real()) < kNonHyperbolic) {
        s.cls = StabilityClass::NonHyperbolic;
    } else if (complex_pair) {
        s.cls = ev[0].real() < 0.0 ? StabilityClass::StableFocus : StabilityClass::UnstableFocus;
    } else if (ev[0].real() < 0.0 && ev[1].real() < 0.0) {
        s.cls = StabilityClass::StableNode;
    } else if (ev[0].real() > 0.0 && ev[1].real() > 0.0) {
        s.cls = StabilityClass::UnstableNode;
    } else {
        s.cls = StabilityClass::Saddle;
    }
    return s;
}

Equilibrium make_equilibrium(const Model& m, std::string label, State x) {
    Equilibrium e;
    e.label = std::move(label);
    e.x = x;
    e.ecological = x.N >= 0.0 && x.P >= 0.0;
    e.stability = classify_unchecked(m, x);
    return e;
}

double polish_root(double a2, double a1, double a0, double x) {
    for (int i = 0; i < 4; ++i) {
        const double p = ((x + a2) * x + a1) * x + a0;
        const double dp = (3.0 * x + 2.0 * a2) * x + a1;
        if (dp == 0.0) break;
        const double nx = x - p / dp;
        const double np = ((nx + a2) * nx + a1) * nx + a0;
        if (!(std::abs(np) < std::abs(p))) break;
        x = nx;
    }
    return x;
}

}  // namespace

Stability classify_stability(const Model& m, const State& x) {
    const double res = scaled_norm(vector_field(m, x));
    if (!(res < 1e-8))
        throw PreconditionError("classify_stability: point is not an equilibrium (residual " +
                                std::to_string(res) + ")");
    return classify_unchecked(m, x);
}

std::vector<double> solve_cubic(double a2, double a1, double a0) {
    const double s = std::max({std::abs(a2), std::sqrt(std::abs(a1)), std::cbrt(std::abs(a0))});
    if (s == 0.0) return {0.0, 0.0, 0.0};
    const double b2 = a2 / s, b1 = a1 / (s * s), b0 = a0 / (s * s * s);
    auto p = [&](double y) { return ((y + b2) * y + b1) * y + b0; };
    auto dp = [&](double y) { return (3.0 * y + 2.0 * b2) * y + b1; };

    // All roots satisfy |y| <= 1 + max|b| <= 2; Newton from the right bound
    // descends onto the largest real root, bisection guards the bracket.
    double lo = -3.0, hi = 3.0;
    double y = hi;
    for (int it = 0; it < 200; ++it) {
        const double py = p(y);
        if (py == 0.0) break;
        if (py > 0.0) hi = y; else lo = y;
        const double d = dp(y);
        double ny = d != 0.0 ? y - py / d : 0.5 * (lo + hi);
        if (!(ny > lo && ny < hi)) ny = 0.5 * (lo + hi);
        if (std::abs(ny - y) <= 1e-16 * std::max(1.0, std::abs(y))) {
            y = ny;
            break;
        }
        y = ny;
    }

    std::vector<double> roots{y};
    const double c1 = b2 + y;
    const double c0 = b1 + y * c1;
    double disc = c1 * c1 - 4.0 * c0;
    const double disc_scale = std::max({c1 * c1, std::abs(c0), 1e-300});
    if (disc < 0.0 && disc > -1e-13 * disc_scale) disc = 0.0;
    if (disc >= 0.0) {
        const double sq = std::sqrt(disc);
        const double q = -0.5 * (c1 + (c1 >= 0.0 ? sq : -sq));
        if (q != 0.0) {
            roots.push_back(q);
            roots.push_back(c0 / q);
        } else {
            roots.push_back(0.0);
            roots.push_back(0.0);
        }
    }
    for (double& r : roots) r = polish_root(a2, a1, a0, r * s);
    std::sort(roots.begin(), roots.end());
    return roots;
}

std::array<double, 3> may_cubic_coefficients(const MayParams& p) {
    const double acq = p.alpha / (p.c * p.q);
    return {-(p.mu - p.beta + p.r / p.c - acq),
            -(p.beta * p.mu + p.r * (p.beta - p.mu) / p.c - acq * (p.nu + p.epsilon)),
            p.r * p.beta * p.mu / p.c + acq * p.nu * p.epsilon};
}

namespace {

EquilibriumSet equilibria_impl(const Model& m, bool require_coexistence) {
    EquilibriumSet out;
    if (const auto* p = std::get_if<RmaParams>(&m)) {
        out.push_back(make_equilibrium(m, "e0", {0.0, 0.0}));
        if (p->r > 0.0) out.push_back(make_equilibrium(m, "e1", {p->r / p->c, 0.0}));
        out.push_back(make_equilibrium(m, "e2", {p->mu, 0.0}));
        const double denom = p->chi * p->alpha - p->delta;
        if (!(denom > 0.0)) {
            if (require_coexistence)
                throw CoexistenceUndefined("RMA coexistence equilibrium undefined: chi*alpha <= delta");
            return out;
        }
        const double N3 = p->delta * p->beta / denom;
        const double P3 = (p->r - p->c * N3) * (p->beta + N3) * (N3 - p->mu) /
                          (p->alpha * (p->nu + N3));
        out.push_back(make_equilibrium(m, "e3", {N3, P3}));
        return out;
    }

    const auto& p = std::get<MayParams>(m);
    out.push_back(make_equilibrium(m, "e0", {0.0, p.epsilon / p.q}));
    if (p.r > 0.0) out.push_back(make_equilibrium(m, "e1", {p.r / p.c, 0.0}));
    out.push_back(make_equilibrium(m, "e2", {p.mu, 0.0}));
    const auto [a2, a1, a0] = may_cubic_coefficients(p);
    std::vector<double> roots = solve_cubic(a2, a1, a0);
    std::vector<double> positive;
    for (double n : roots)
        if (n >= 0.0) positive.push_back(n);
    std::sort(positive.rbegin(), positive.rend());
    const char* labels[] = {"e3", "e4"};
    for (std::size_t i = 0; i < positive.size() && i < 2; ++i) {
        const double N = positive[i];
        out.push_back(make_equilibrium(m, labels[i], {N, (N + p.epsilon) / p.q}));
    }
    return out;
}

}  // namespace

EquilibriumSet equilibria(const Model& m) { return equilibria_impl(m, true); }

EquilibriumSet all_equilibria(const Model& m) { return equilibria_impl(m, false); }

const Equilibrium* find_equilibrium(const EquilibriumSet& set, const std::string& label) {
    for (const auto& e : set)
        if (e.label == label) return &e;
    return nullptr;
}

State coexistence_equilibrium(const Model& m) {
    const auto set = equilibria_impl(m, true);
    const auto* e3 = find_equilibrium(set, "e3");
    if (!e3 || !e3->ecological)
        throw CoexistenceUndefined("no ecological coexistence equilibrium e3 at r=" +
                                   std::to_string(r_of(m)));
    return e3->x;
}

std::optional<Equilibrium> threshold_saddle(const Model& m) {
    const auto set = equilibria_impl(m, false);
    const auto* e = find_equilibrium(set, family_of(m) == Family::Rma ? "e2" : "e4");
    if (!e || !e->ecological || e->stability.cls != StabilityClass::Saddle) return std::nullopt;
    return *e;
}

AttractorCatalog attractor_catalog(const Model& m) {
    AttractorCatalog cat;
    for (const auto& e : equilibria_impl(m, false)) {
        if (e.ecological && is_attracting(e.stability.cls)) cat.equilibria.push_back({e.label, e.x});
        if (e.label == "e3" && e.ecological && e.x.P > 0.0) cat.cycle = CycleWitness{e.x};
    }
    return cat;
}

}  // namespace ptip
