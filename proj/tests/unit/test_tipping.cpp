#include <doctest.h>

#include <cmath>
#include <numeric>

#include "ptip/errors.hpp"
#include "ptip/tipping.hpp"

using namespace ptip;

namespace {

Model rma(double r = 2.47) { return with_r(preset_model("rma-lynx-hare"), r); }

ExperimentConfig rma_experiment(double lo, double hi, std::size_t runs, double horizon) {
    ExperimentConfig cfg;
    cfg.model = rma();
    cfg.climate.r_low = lo;
    cfg.climate.r_high = hi;
    cfg.climate.horizon = horizon;
    cfg.n_runs = runs;
    return cfg;
}

State advance(const Model& m, State x, double t0, double t1) {
    return integrate(field_of(m), x, t0, t1).back();
}

}  // namespace

TEST_CASE("event kind rule") {
    TippingRecord rec;
    rec.r_pre = 2.4;
    rec.r_post = 2.65;
    CHECK(classify_event(rec, 2.61) == TipKind::B);
    rec.r_post = 1.7;
    CHECK(classify_event(rec, 2.61) == TipKind::P);
    rec.r_post = 2.61;
    CHECK(classify_event(rec, 2.61) == TipKind::P);
    rec.r_post = 2.65;
    CHECK(classify_event(rec, std::nullopt) == TipKind::P);
}

TEST_CASE("r_h resolution") {
    CHECK(!resolve_r_h(rma_experiment(1.6, 2.5, 1, 100)).has_value());
    const auto rh = resolve_r_h(rma_experiment(1.6, 2.7, 1, 100));
    REQUIRE(rh);
    CHECK(std::abs(*rh - 2.61) < 0.05);
    ExperimentConfig off = rma_experiment(1.6, 2.7, 1, 100);
    off.detect_r_h = false;
    CHECK_THROWS_AS(resolve_r_h(off), ClassificationUndefined);
    off.r_h = 2.6;
    CHECK(*resolve_r_h(off) == 2.6);
}

TEST_CASE("frozen climate inside the cycle window never tips") {
    const MonteCarloResult mc = run_monte_carlo(rma_experiment(2.47, 2.47, 8, 300));
    CHECK(mc.records.empty());
    CHECK(mc.count(RunOutcome::NoTip) == 8);
}

TEST_CASE("short experiment without r_h tips by P only and is deterministic") {
    const ExperimentConfig cfg = rma_experiment(1.6, 2.5, 24, 3000);
    const MonteCarloResult a = run_monte_carlo(cfg);
    const MonteCarloResult b = run_monte_carlo(cfg);
    REQUIRE(a.records.size() == b.records.size());
    CHECK(!a.records.empty());
    for (std::size_t i = 0; i < a.records.size(); ++i) {
        CHECK(a.records[i].kind == TipKind::P);
        CHECK(a.records[i].t1 == b.records[i].t1);
        CHECK(a.records[i].x_b == b.records[i].x_b);
        CHECK(a.records[i].r_post < a.records[i].r_pre);
    }
}

TEST_CASE("interval containing r_h produces B events above it") {
    const MonteCarloResult mc = run_monte_carlo(rma_experiment(1.6, 2.7, 40, 2000));
    REQUIRE(mc.r_h);
    std::size_t nB = 0;
    for (const auto& r : mc.records) {
        if (r.kind == TipKind::B) {
            ++nB;
            CHECK(r.r_post > *mc.r_h);
        }
    }
    CHECK(nB > 0);
}

TEST_CASE("scripted signal with a rescue") {
    const ExperimentConfig cfg = rma_experiment(1.6, 2.5, 1, 400);
    const TippingContext ctx(cfg);
    const Model high = rma(2.47), low = rma(1.6);

    // First whole year on the r = 2.47 orbit at which switching to 1.6 leaves
    // the basin, while one year at 1.6 still returns to the basin of 2.47.
    int d = 0;
    State at_switch{}, after_low{};
    State x = cfg.x0;
    for (int year = 1; year < 200 && d == 0; ++year) {
        x = advance(high, x, year - 1, year);
        if (year < 20 || ctx.member(x, 1.6) != Membership::Outside) continue;
        const State y = advance(low, x, 0.0, 1.0);
        if (in_basin_oracle(y, high) == Membership::Inside && ctx.member(y, 2.47) == Membership::Inside) {
            d = year;
            at_switch = x;
            after_low = y;
        }
    }
    REQUIRE(d > 0);
    CHECK(in_basin_oracle(at_switch, low) == Membership::Outside);

    SUBCASE("returning after one year is a rescue, not a tip") {
        ClimateSignal s;
        s.epochs = {{0.0, d, 2.47}, {double(d), 1, 1.6}, {double(d + 1), 400, 2.47}};
        const RunResult res = run_with_signal(ctx, s, 0);
        CHECK(res.rescues >= 1);
        CHECK(res.outcome == RunOutcome::NoTip);
        CHECK(!res.record);
    }
    SUBCASE("staying at the low value tips at the switch") {
        ClimateSignal s;
        s.epochs = {{0.0, d, 2.47}, {double(d), 400, 1.6}};
        const RunResult res = run_with_signal(ctx, s, 0);
        REQUIRE(res.outcome == RunOutcome::Tipped);
        REQUIRE(res.record);
        CHECK(res.record->t1 == doctest::Approx(d));
        CHECK(res.record->rescues == 0);
        CHECK(res.record->kind == TipKind::P);
        CHECK(res.record->r_pre == 2.47);
        CHECK(res.record->r_post == 1.6);
    }
    SUBCASE("a later fatal switch sets the tipping time after a rescue") {
        // Return to 2.47 for k years, then drop to 1.6 for good at a phase
        // that leaves the basin.
        State y = after_low;
        int k = 0;
        for (int year = 1; year < 200 && k == 0; ++year) {
            y = advance(high, y, year - 1, year);
            if (year >= 5 && ctx.member(y, 1.6) == Membership::Outside) k = year;
        }
        REQUIRE(k > 0);
        ClimateSignal s;
        s.epochs = {{0.0, d, 2.47}, {double(d), 1, 1.6}, {double(d + 1), k, 2.47}, {double(d + 1 + k), 400, 1.6}};
        const RunResult res = run_with_signal(ctx, s, 0);
        REQUIRE(res.record);
        CHECK(res.record->t1 == doctest::Approx(d + 1 + k));
        CHECK(res.record->rescues >= 1);
    }
}

TEST_CASE("phase statistics helpers") {
    CHECK(largest_phase_gap({}) == doctest::Approx(kTwoPi));
    CHECK(largest_phase_gap({1.0}) == doctest::Approx(kTwoPi));
    CHECK(largest_phase_gap({0.5, 1.0}) == doctest::Approx(kTwoPi - 0.5));
    CHECK(pearson({1, 2, 3}, {2, 4, 6}) == doctest::Approx(1.0));
    CHECK(pearson({1, 2, 3}, {3, 2, 1}) == doctest::Approx(-1.0));
    std::vector<TippingRecord> recs(3);
    recs[0].phi_xb = 0.1;
    recs[1].phi_xb = 3.0;
    recs[1].kind = TipKind::B;
    recs[2].phi_xb = 6.0;
    recs[2].t1 = 4.5;
    const HistogramBundle h = make_histograms(recs, 8, 1.0);
    CHECK(h.phase_edges.size() == 9);
    CHECK(std::accumulate(h.phase_P.begin(), h.phase_P.end(), std::size_t{0}) == 2);
    CHECK(std::accumulate(h.phase_B.begin(), h.phase_B.end(), std::size_t{0}) == 1);
    CHECK(std::accumulate(h.time_counts.begin(), h.time_counts.end(), std::size_t{0}) == 3);
}

TEST_CASE("experiment configuration is validated") {
    ExperimentConfig cfg = rma_experiment(1.6, 2.5, 1, 100);
    cfg.n_runs = 0;
    try {
        cfg.validate();
        FAIL("expected ConfigError");
    } catch (const ConfigError& e) {
        CHECK(e.key == "experiment.n_runs");
    }
}
