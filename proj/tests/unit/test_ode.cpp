#include <doctest.h>

#include <cmath>
#include <vector>

#include "ptip/errors.hpp"
#include "ptip/models.hpp"
#include "ptip/ode.hpp"

using namespace ptip;

namespace {

Model rma(double r = 2.47) { return with_r(preset_model("rma-lynx-hare"), r); }

State endpoint(const Model& m, State x0, double t1, const IntegratorConfig& cfg) {
    return integrate(field_of(m), x0, 0.0, t1, cfg).back();
}

double fit_slope(const std::vector<double>& x, const std::vector<double>& y) {
    const double n = static_cast<double>(x.size());
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        mx += x[i] / n;
        my += y[i] / n;
    }
    double sxy = 0.0, sxx = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sxy += (x[i] - mx) * (y[i] - my);
        sxx += (x[i] - mx) * (x[i] - mx);
    }
    return sxy / sxx;
}

}  // namespace

TEST_CASE("prey axis is invariant") {
    const Trajectory tr = integrate(field_of(rma()), {1.0, 0.0}, 0.0, 300.0);
    for (const auto& x : tr.states()) REQUIRE(x.P == 0.0);
    CHECK(tr.back().N == doctest::Approx(13.0).epsilon(1e-6));
}

TEST_CASE("fixed-step error slope matches the nominal order 5") {
    // N' = -N/2, P' = N^2 - P has N(t) = exp(-t/2).
    const VectorField f = [](const State& x) { return State{-0.5 * x.N, x.N * x.N - x.P}; };
    std::vector<double> logh, logerr;
    for (double h : {0.2, 0.1, 0.05, 0.025}) {
        IntegratorConfig cfg;
        cfg.fixed_step = h;
        cfg.max_step = h;
        logh.push_back(std::log(h));
        logerr.push_back(std::log(std::abs(integrate(f, {1.0, 0.0}, 0.0, 10.0, cfg).back().N - std::exp(-5.0))));
    }
    const double slope = fit_slope(logh, logerr);
    MESSAGE("observed order " << slope);
    CHECK(std::abs(slope - 5.0) <= 0.5);
}

TEST_CASE("self-convergence on the predator-prey field is at least order 5") {
    const Model m = rma();
    const State x0{3.0, 0.002};
    const double T = 10.0;
    IntegratorConfig ref_cfg;
    ref_cfg.fixed_step = 0.003125;
    const State ref = endpoint(m, x0, T, ref_cfg);
    std::vector<double> logh, logerr;
    for (double h : {0.1, 0.05, 0.025}) {
        IntegratorConfig cfg;
        cfg.fixed_step = h;
        cfg.max_step = h;
        logh.push_back(std::log(h));
        logerr.push_back(std::log(scaled_distance(endpoint(m, x0, T, cfg), ref)));
    }
    const double slope = fit_slope(logh, logerr);
    MESSAGE("observed order " << slope);
    CHECK(slope >= 4.5);
}

TEST_CASE("halving the tolerances changes the endpoint by less than the coarse error") {
    const Model m = rma();
    const State x0{3.0, 0.002};
    IntegratorConfig coarse, half, tight;
    half.rel_tol = coarse.rel_tol / 2;
    half.abs_tol_N = coarse.abs_tol_N / 2;
    half.abs_tol_P = coarse.abs_tol_P / 2;
    tight.rel_tol = coarse.rel_tol / 10;
    tight.abs_tol_N = coarse.abs_tol_N / 10;
    tight.abs_tol_P = coarse.abs_tol_P / 10;
    const State a = endpoint(m, x0, 50.0, coarse);
    const State b = endpoint(m, x0, 50.0, half);
    const State c = endpoint(m, x0, 50.0, tight);
    const double coarse_error = scaled_distance(a, c);
    CHECK(scaled_distance(a, b) < coarse_error);
}

TEST_CASE("trajectory from (3, 0.002) settles on a periodic orbit") {
    const Model m = rma();
    const double N3 = coexistence_equilibrium(m).N;
    EventSpec section{[N3](const State& x) { return x.N - N3; }, +1, false};
    IntegratorConfig cfg;
    const EventResult res = integrate_with_events(field_of(m), {3.0, 0.002}, 0.0, cfg, {section}, 500.0);
    REQUIRE(res.hits.size() > 10);
    const auto& h = res.hits;
    const double late = scaled_distance(h[h.size() - 1].x, h[h.size() - 2].x);
    const double early = scaled_distance(h[1].x, h[0].x);
    CHECK(late < 1e-6);
    CHECK(late < early);
}

TEST_CASE("two section choices give the same period") {
    const Model m = rma();
    const State e3 = coexistence_equilibrium(m);
    IntegratorConfig cfg;
    auto period = [&](EventSpec spec) {
        const EventResult res = integrate_with_events(field_of(m), {3.0, 0.002}, 0.0, cfg, {spec}, 1500.0);
        REQUIRE(res.hits.size() > 3);
        const auto& h = res.hits;
        return h[h.size() - 1].t - h[h.size() - 2].t;
    };
    const double T1 = period({[&](const State& x) { return x.N - e3.N; }, +1, false});
    const double T2 = period({[&](const State& x) { return x.P - e3.P; }, +1, false});
    CHECK(std::abs(T1 - T2) < 1e-4);
}

TEST_CASE("predator density never reaches zero on the interior cycle") {
    const Model m = rma();
    IntegratorConfig cfg;
    const EventResult res =
        integrate_with_events(field_of(m), {3.0, 0.002}, 0.0, cfg, {{[](const State& x) { return x.P; }, 0, false}}, 500.0);
    CHECK(res.hits.empty());
}

TEST_CASE("an event exactly at t0 is reported once") {
    const Model m = rma();
    IntegratorConfig cfg;
    const EventResult res = integrate_with_events(field_of(m), {3.0, 0.002}, 0.0, cfg,
                                                  {{[](const State& x) { return x.N - 3.0; }, 0, false}}, 1e-3);
    std::size_t at_t0 = 0;
    for (const auto& h : res.hits) at_t0 += h.t == 0.0;
    CHECK(at_t0 == 1);
    REQUIRE(!res.hits.empty());
    CHECK(res.hits.front().t == 0.0);
}

TEST_CASE("event localization is tight") {
    const Model m = rma();
    IntegratorConfig cfg;
    const EventResult res = integrate_with_events(field_of(m), {3.0, 0.002}, 0.0, cfg,
                                                  {{[](const State& x) { return x.N - 5.0; }, +1, true}});
    REQUIRE(res.terminated);
    REQUIRE(res.hits.size() == 1);
    CHECK(res.hits[0].x.N == doctest::Approx(5.0).epsilon(1e-7));
    CHECK(res.trajectory.t_end() == res.hits[0].t);
}

TEST_CASE("dense output interpolates inside each step") {
    const Model m = rma();
    const Trajectory tr = integrate(field_of(m), {3.0, 0.002}, 0.0, 20.0);
    for (std::size_t i = 1; i < tr.size(); ++i) {
        const double tm = 0.5 * (tr.times()[i - 1] + tr.times()[i]);
        const State mid = tr.at(tm);
        const State fine = integrate(field_of(m), tr.states()[i - 1], tr.times()[i - 1], tm).back();
        REQUIRE(scaled_distance(mid, fine) < 1e-5);
    }
}

TEST_CASE("attractor convergence from the reference initial conditions") {
    const Model m = rma();
    const AttractorCatalog cat = attractor_catalog(m);
    IntegratorConfig cfg;
    cfg.max_time = 3000.0;
    SUBCASE("high predation converges to extinction") {
        const AttractorLabel l = converge_to_attractor(field_of(m), {0.01, 0.02}, cfg, cat);
        CHECK(l.kind == AttractorKind::Equilibrium);
        CHECK(l.name == "e0");
    }
    SUBCASE("(3, 0.002) converges to the cycle") {
        const AttractorLabel l = converge_to_attractor(field_of(m), {3.0, 0.002}, cfg, cat);
        CHECK(l.kind == AttractorKind::Cycle);
    }
    SUBCASE("starting on e0 is decided after the dwell") {
        const AttractorLabel l = converge_to_attractor(field_of(m), {0.0, 0.0}, cfg, cat);
        CHECK(l.name == "e0");
        CHECK(l.decided_at <= cat.dwell + 1e-9);
    }
}

TEST_CASE("integrator configuration is validated") {
    IntegratorConfig cfg;
    cfg.rel_tol = 0.0;
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
    CHECK_THROWS_AS(integrate(field_of(rma()), {1.0, 0.0}, 0.0, 1.0, cfg), ConfigError);
}

TEST_CASE("blow-up is reported as an integration error") {
    const VectorField f = [](const State& x) { return State{x.N * x.N, 0.0}; };
    CHECK_THROWS_AS(integrate(f, {1.0, 0.0}, 0.0, 2.0), IntegrationError);
}
