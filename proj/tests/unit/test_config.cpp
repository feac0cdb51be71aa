#include <doctest.h>

#include <algorithm>
#include <filesystem>
#include <functional>
#include <fstream>

#include "ptip/config.hpp"
#include "ptip/csv.hpp"
#include "ptip/errors.hpp"

using namespace ptip;
namespace fs = std::filesystem;

namespace {

fs::path write_temp(const std::string& name, const std::string& text) {
    const fs::path p = fs::temp_directory_path() / ("ptip_config_" + name);
    std::ofstream(p) << text;
    return p;
}

std::string error_key(const std::function<void()>& fn) {
    try {
        fn();
    } catch (const ConfigError& e) {
        return e.key;
    }
    return "<no error>";
}

}  // namespace

TEST_CASE("fig3 preset expansion") {
    const RunConfig rc = load_config(std::nullopt, "fig3");
    const ExperimentConfig& ex = rc.experiment;
    CHECK(family_of(ex.model) == Family::Rma);
    CHECK(ex.climate.r_low == 1.6);
    CHECK(ex.climate.r_high == 2.7);
    CHECK(ex.climate.rho == 0.2);
    CHECK(ex.x0 == State{3.0, 0.002});
    CHECK(ex.n_runs == 1000);
    CHECK(rc.command == "montecarlo");
}

TEST_CASE("fig5 preset expansion") {
    const RunConfig rc = load_config(std::nullopt, "fig5");
    CHECK(family_of(rc.experiment.model) == Family::May);
    CHECK(rc.experiment.climate.r_low == 2.0);
    CHECK(rc.experiment.climate.r_high == 3.3);
    CHECK(second_param(rc.experiment.model) == 205.0);
}

TEST_CASE("every figure has a preset that resolves") {
    const std::vector<std::string> expected = {"fig1a", "fig1b", "fig2a", "fig2b", "fig3", "fig4", "fig5",
                                               "fig6a", "fig6b", "fig7",  "fig8",  "fig9a", "fig9b"};
    auto names = preset_names();
    std::sort(names.begin(), names.end());
    auto sorted = expected;
    std::sort(sorted.begin(), sorted.end());
    CHECK(names == sorted);
    for (const auto& n : expected) CHECK_NOTHROW(load_config(std::nullopt, n));
    CHECK(error_key([] { (void)load_config(std::nullopt, "fig10"); }) == "preset");
}

TEST_CASE("empty file lists the required keys") {
    const fs::path p = write_temp("empty.json", "");
    try {
        (void)load_config(p.string());
        FAIL("expected ConfigError");
    } catch (const ConfigError& e) {
        CHECK(e.key == "preset | model.family");
        CHECK(std::string(e.what()).find("preset | model.family") != std::string::npos);
    }
}

TEST_CASE("schema violations name the key") {
    CHECK(error_key([] { (void)load_config(std::nullopt, "fig4", {"climate.rho=1.5"}); }) == "climate.rho");
    CHECK(error_key([] { (void)load_config(std::nullopt, "fig4", {"climate.colour=1"}); }) == "climate.colour");
    CHECK(error_key([] { (void)load_config(std::nullopt, "fig4", {"experiment.n_runs=0"}); }) == "experiment.n_runs");
    CHECK(error_key([] { (void)load_config(std::nullopt, "fig4", {"experiment.n_runs=abc"}); }) == "experiment.n_runs");
    CHECK(error_key([] { (void)load_config(std::nullopt, "fig4", {"model.params.zeta=1"}); }) == "model.params.zeta");
    CHECK(error_key([] { (void)load_config(std::nullopt, "fig4", {"model.params.c=-1"}); }) == "model.params.c");
    CHECK(error_key([] { (void)load_config(std::nullopt, "fig4", {"model.family=\"lv\""}); }) == "model.family");
    CHECK(error_key([] { (void)load_config(std::nullopt, "fig4", {"climate=3"}); }) == "climate");
    CHECK(error_key([] { (void)load_config(std::nullopt, "fig4", {"noequals"}); }) == "noequals");
    const fs::path bad = write_temp("bad.json", "{\"preset\": \"fig4\", ");
    CHECK(error_key([&] { (void)load_config(bad.string()); }) == "<file>");
}

TEST_CASE("layering: defaults, preset, file, overrides, seed") {
    const fs::path p = write_temp("layer.json", R"({"preset": "fig4", "climate": {"rho": 0.3}, "experiment": {"n_runs": 50}})");
    const RunConfig a = load_config(p.string());
    CHECK(a.preset == "fig4");
    CHECK(a.experiment.climate.rho == 0.3);
    CHECK(a.experiment.n_runs == 50);
    CHECK(a.experiment.climate.r_high == 2.5);

    const RunConfig b = load_config(p.string(), "fig3", {"experiment.n_runs=7", "model.params.delta=2.3"}, 42);
    CHECK(b.preset == "fig3");
    CHECK(b.experiment.climate.r_high == 2.7);
    CHECK(b.experiment.n_runs == 7);
    CHECK(second_param(b.experiment.model) == 2.3);
    CHECK(b.experiment.climate.seed == 42);
    CHECK(b.snapshot["seed"] == 42);

    const RunConfig c = load_config(std::nullopt, std::nullopt, {"model.family=rma", "model.params.r=2.0"});
    CHECK(r_of(c.experiment.model) == 2.0);
    CHECK(c.preset.empty());
}

TEST_CASE("CSV number formatting and round trip") {
    CHECK(format_number(0.1) == "0.1");
    CHECK(format_number(2.0) == "2");
    CHECK(format_number(std::nan("")) == "nan");
    CHECK(std::stod(format_number(1.0 / 3.0)) == 1.0 / 3.0);
    CsvWriter w({"a", "b"});
    w.cell(1.5).cell("x").end_row();
    w.cell(std::size_t{3}).cell(true).end_row();
    CHECK(w.text() == "a,b\n1.5,x\n3,1\n");
    CHECK_THROWS(w.cell(1.0).end_row());
    const fs::path p = fs::temp_directory_path() / "ptip_config_rt.csv";
    CsvWriter ok({"a", "b"});
    ok.cell(1.5).cell("x").end_row();
    ok.write(p);
    const CsvTable t = read_csv(p);
    CHECK(t.header == std::vector<std::string>{"a", "b"});
    REQUIRE(t.rows.size() == 1);
    CHECK(t.rows[0][1] == "x");
}
