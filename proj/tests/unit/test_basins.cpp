#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "ptip/basins.hpp"
#include "ptip/errors.hpp"

using namespace ptip;

namespace {

Model rma(double r = 2.47) { return with_r(preset_model("rma-lynx-hare"), r); }
Model may(double r = 2.0) { return with_r(preset_model("may-lynx-hare"), r); }

const LimitCycle& rma_cycle() {
    static const LimitCycle c = find_limit_cycle(rma());
    return c;
}

const LimitCycle& may_cycle() {
    static const LimitCycle c = find_limit_cycle(may(3.3));
    return c;
}

BasinClassification classify(const LimitCycle& c, double r2) {
    return classify_basin_instability(c, threshold_covering(with_r(c.model, r2), c));
}

}  // namespace

TEST_CASE("RMA threshold emanates from e2 into the interior") {
    const BasinBoundary b = allee_threshold(rma());
    const auto& poly = b.polyline();
    REQUIRE(poly.size() > 100);
    CHECK(scaled_distance(poly.front(), {0.03, 0.0}) < 1e-3);
    double max_P = 0.0;
    for (const auto& x : poly) max_P = std::max(max_P, x.P);
    CHECK(max_P > 0.0);
    CHECK(b.saddle().N == doctest::Approx(0.03));
}

TEST_CASE("May threshold saddle is e4 near e2") {
    const BasinBoundary b = allee_threshold(may());
    CHECK(b.saddle().N < 0.1);
    CHECK(b.saddle().N > 0.03);
}

TEST_CASE("geometric membership agrees with the integration oracle off the band") {
    const Model m = rma();
    const BasinBoundary b = allee_threshold(m);
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> uN(0.01, 15.0), uP(1e-4, 0.04);
    std::size_t tested = 0, agree = 0;
    while (tested < 200) {
        const State x{uN(rng), uP(rng)};
        if (b.distance(x) <= 1e-2 || !b.in_box(x)) continue;
        const Membership geo = in_basin(x, b);
        REQUIRE(geo != Membership::Indeterminate);
        ++tested;
        agree += geo == in_basin_oracle(x, m);
    }
    MESSAGE("agreement " << agree << "/" << tested);
    CHECK(static_cast<double>(agree) / tested >= 0.995);
}

TEST_CASE("membership examples") {
    const Model m = rma();
    const BasinBoundary b = allee_threshold(m);
    CHECK(in_basin(coexistence_equilibrium(m), b) == Membership::Inside);
    CHECK(in_basin({0.01, 0.02}, b) == Membership::Outside);
    CHECK(in_basin_oracle({0.01, 0.02}, m) == Membership::Outside);
    CHECK(in_basin(b.saddle(), b) == Membership::Indeterminate);
    CHECK(in_basin({2.0, 0.0}, b) == Membership::Outside);
}

TEST_CASE("RMA basin-instability classes against Gamma(2.47)") {
    CHECK(classify(rma_cycle(), 2.05).cls == BasinClass::Stable);
    const BasinClassification partial = classify(rma_cycle(), 1.8);
    CHECK(partial.cls == BasinClass::Partial);
    CHECK(partial.crossings.size() == 2);
    CHECK(classify(rma_cycle(), 2.47).cls == BasinClass::Stable);
}

TEST_CASE("tangency parameters classify as marginal") {
    const double rma_star = marginal_r2(rma_cycle(), 1.8, 2.05, 1e-6);
    CHECK(std::abs(rma_star - 1.923) < 0.02);
    CHECK(classify(rma_cycle(), rma_star).cls == BasinClass::Marginal);
    const double may_star = marginal_r2(may_cycle(), 2.0, 2.82, 1e-6);
    CHECK(std::abs(may_star - 2.41) < 0.02);
    CHECK(classify(may_cycle(), may_star).cls == BasinClass::Marginal);
    CHECK_THROWS_AS(marginal_r2(rma_cycle(), 2.05, 2.3), BracketError);
}

TEST_CASE("May basin-instability classes against Gamma(3.3)") {
    CHECK(classify(may_cycle(), 2.82).cls == BasinClass::Stable);
    CHECK(classify(may_cycle(), 2.0).cls == BasinClass::Partial);
}

TEST_CASE("unstable phase intervals") {
    const LimitCycle& c = rma_cycle();
    auto interval = [&](double r2) {
        return unstable_phase_interval(c, threshold_covering(with_r(c.model, r2), c));
    };
    const PhaseInterval at18 = interval(1.8);
    REQUIRE(!at18.empty);
    CHECK(at18.contains(kTwoPi / 4));
    const double star = marginal_r2(c, 1.8, 2.05, 1e-6);
    const PhaseInterval tangent = interval(star);
    CHECK(tangent.width < 1e-2);
    CHECK(interval(2.05).empty);
    double previous = tangent.empty ? 0.0 : tangent.width;
    for (double r2 = 1.9; r2 >= 1.6 - 1e-9; r2 -= 0.05) {
        const PhaseInterval iv = interval(r2);
        REQUIRE(!iv.empty);
        CHECK(iv.width >= previous - 1e-9);
        previous = iv.width;
    }
}

TEST_CASE("two-parameter basin-instability cells") {
    GridSpec g;
    g.r_min = 1.8;
    g.r_max = 2.05;
    g.r_count = 2;
    g.s_min = g.s_max = 2.2;
    g.s_count = 1;
    const BiRegionMap map = bi_region_map(rma(), 2.47, 2.2, g);
    REQUIRE(map.cells.size() == 2);
    REQUIRE(map.cells[0].cls);
    REQUIRE(map.cells[1].cls);
    CHECK(*map.cells[0].cls == BasinClass::Partial);
    CHECK(*map.cells[1].cls == BasinClass::Stable);

    GridSpec gm;
    gm.r_min = 2.0;
    gm.r_max = 2.82;
    gm.r_count = 2;
    gm.s_min = gm.s_max = 205.0;
    gm.s_count = 1;
    const BiRegionMap mm = bi_region_map(may(), 3.3, 205.0, gm);
    CHECK(*mm.cells[0].cls == BasinClass::Partial);
    CHECK(*mm.cells[1].cls == BasinClass::Stable);

    GridSpec self;
    self.r_min = self.r_max = 2.47;
    self.r_count = 1;
    self.s_min = self.s_max = 2.2;
    self.s_count = 1;
    CHECK(*bi_region_map(rma(), 2.47, 2.2, self).cells[0].cls == BasinClass::Stable);
}

TEST_CASE("cells without a cycle are not applicable") {
    GridSpec g;
    g.r_min = g.r_max = 1.2;
    g.r_count = 1;
    g.s_min = g.s_max = 2.2;
    g.s_count = 1;
    const BiRegionMap map = bi_region_map(rma(), 2.47, 2.2, g);
    CHECK(!map.cells[0].cls);
    CHECK(map.cells[0].reason == "no cycle");
}

TEST_CASE("G-strip partitions") {
    const CycleFamily rf = cycle_family(rma(), 1.6, 2.5, 0.05);
    const GStripPartition rg = g_strip_partition(rf, family_threshold(rf));
    CHECK(rg.unstable_count() > 0);
    for (std::size_t i = 0; i < rg.points.size(); ++i)
        if (std::abs(rg.r[i] - 1.6) < 1e-12) REQUIRE(!rg.unstable[i]);

    const CycleFamily mf = cycle_family(may(), 2.0, 3.3, 0.05);
    const GStripPartition mg = g_strip_partition(mf, family_threshold(mf));
    CHECK(mg.unstable_count() > 0);

    auto phase_width = [](const GStripPartition& g, const CycleFamily& f) {
        const State anchor = f.cycles.back().anchor;
        std::vector<bool> hit(360, false);
        for (std::size_t i = 0; i < g.points.size(); ++i)
            if (g.unstable[i]) hit[std::min<std::size_t>(359, phase_of(g.points[i], anchor) / kTwoPi * 360)] = true;
        return std::count(hit.begin(), hit.end(), true);
    };
    CHECK(phase_width(mg, mf) > phase_width(rg, rf));
}

TEST_CASE("no threshold without bistability") {
    CHECK_THROWS_AS(allee_threshold(rma(0.2)), NotBistable);
}
