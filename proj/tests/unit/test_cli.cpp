#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <sys/wait.h>

#include <json.hpp>

#include "ptip/cli.hpp"
#include "ptip/csv.hpp"

using namespace ptip;
namespace fs = std::filesystem;

namespace {

fs::path scratch() {
    const char* env = std::getenv("PTIP_TEST_TMP");
    const fs::path root = env ? fs::path(env) : fs::temp_directory_path() / "ptip_cli_tests";
    fs::create_directories(root);
    return root;
}

std::string slurp(const fs::path& p) {
    std::ifstream f(p, std::ios::binary);
    std::stringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

/// Runs the installed binary; stderr is captured to a file.
int run_cli(const std::string& args, std::string* err = nullptr) {
    const fs::path log = scratch() / "stderr.txt";
    const std::string cmd = std::string(PTIP_CLI_PATH) + " " + args + " >/dev/null 2>" + log.string();
    const int status = std::system(cmd.c_str());
    if (err) *err = slurp(log);
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

}  // namespace

TEST_CASE("usage errors exit with 2") {
    CHECK(run_cli("frobnicate") == 2);
    CHECK(run_cli("") == 2);
    CHECK(run_command(std::vector<std::string>{"frobnicate"}) == 2);
}

TEST_CASE("malformed rho exits with 2 and names the key") {
    std::string err;
    CHECK(run_cli("montecarlo --preset fig4 climate.rho=1.5 --out-dir " + (scratch() / "bad").string(), &err) == 2);
    CHECK(err.find("climate.rho") != std::string::npos);
    CHECK(err.find("(0, 1)") != std::string::npos);
    CHECK(!fs::exists(scratch() / "bad" / "manifest.json"));
}

TEST_CASE("empty config file exits with 2 listing the required keys") {
    const fs::path p = scratch() / "empty.json";
    std::ofstream(p).close();
    std::string err;
    CHECK(run_cli("cycle " + p.string(), &err) == 2);
    CHECK(err.find("preset | model.family") != std::string::npos);
}

TEST_CASE("runtime failures exit with 1") {
    std::string err;
    CHECK(run_cli("cycle --preset fig2a model.params.r=1.2 --out-dir " + (scratch() / "nocycle").string(), &err) == 1);
    CHECK(err.find("e3") != std::string::npos);
}

TEST_CASE("montecarlo writes records, histograms and a manifest; reruns are byte-identical") {
    const std::string common = "montecarlo --preset fig4 experiment.n_runs=12 climate.horizon=1500 --set montecarlo.measure=false";
    const fs::path a = scratch() / "mc_a", b = scratch() / "mc_b", c = scratch() / "mc_c";
    for (const auto& d : {a, b, c}) fs::remove_all(d);
    REQUIRE(run_cli(common + " --out-dir " + a.string()) == 0);
    REQUIRE(run_cli(common + " --out-dir " + b.string()) == 0);
    REQUIRE(run_cli(common + " --seed 2 --out-dir " + c.string()) == 0);

    for (const char* name : {"records.csv", "hist_phase.csv", "hist_time.csv", "hist_r.csv", "runs.csv", "summary.csv"}) {
        REQUIRE(fs::exists(a / name));
        CHECK(slurp(a / name) == slurp(b / name));
    }
    const CsvTable rec = read_csv(a / "records.csv");
    CHECK(rec.header == std::vector<std::string>{"run", "t1_yr", "r_pre", "r_post", "N_b", "P_b", "phi_b", "kind",
                                                  "rescues", "converged_pre"});
    for (const auto& row : rec.rows) CHECK(row[7] == "P");
    CHECK(slurp(a / "runs.csv") != slurp(c / "runs.csv"));

    const auto ma = nlohmann::json::parse(slurp(a / "manifest.json"));
    const auto mb = nlohmann::json::parse(slurp(b / "manifest.json"));
    CHECK(ma["outputs"] == mb["outputs"]);
    CHECK(ma["schema_version"] == kSchemaVersion);
    CHECK(ma["seed"] == 1);
    CHECK(ma["errors"].empty());
    for (const auto& o : ma["outputs"])
        CHECK(o["sha256"] == sha256_hex(slurp(a / o["path"].get<std::string>())));
    const auto mc = nlohmann::json::parse(slurp(c / "manifest.json"));
    CHECK(mc["seed"] == 2);
    CHECK(mc["config"]["seed"] == 2);
}

TEST_CASE("biregion writes the region grid") {
    const fs::path d = scratch() / "bi";
    fs::remove_all(d);
    const std::string grid = "'biregion.grid={\"r_min\":1.8,\"r_max\":2.05,\"r_count\":2,\"s_min\":2.2,\"s_max\":2.2,\"s_count\":1}'";
    REQUIRE(run_cli("biregion --preset fig7 " + grid + " biregion.marginal_bracket=null biregion.path_step=0.05 --out-dir " + d.string()) == 0);
    const CsvTable t = read_csv(d / "biregion.csv");
    CHECK(t.header == std::vector<std::string>{"r1", "delta1", "r2", "delta2", "class", "reason", "d_min", "phi_minus", "phi_plus"});
    REQUIRE(t.rows.size() == 2);
    CHECK(t.rows[0][4] == "partial");
    CHECK(t.rows[1][4] == "stable");
    CHECK(fs::exists(d / "biregion_path.csv"));
}

TEST_CASE("default output directory comes from the environment") {
    const fs::path d = scratch() / "env_out";
    fs::remove_all(d);
    const std::string cmd = "PTIP_OUT_DIR=" + d.string() + " " + std::string(PTIP_CLI_PATH) +
                            " equilibria --preset fig2a >/dev/null 2>&1";
    CHECK(std::system(cmd.c_str()) == 0);
    CHECK(fs::exists(d / "equilibria.csv"));
    CHECK(fs::exists(d / "manifest.json"));
}

TEST_CASE("signal and series from simulate") {
    const fs::path d = scratch() / "sim";
    fs::remove_all(d);
    REQUIRE(run_cli("simulate --preset fig4 climate.horizon=200 simulate.run=3 --out-dir " + d.string()) == 0);
    const CsvTable s = read_csv(d / "signal.csv");
    CHECK(s.header == std::vector<std::string>{"start_yr", "duration_yr", "r_value", "type"});
    CHECK(!s.rows.empty());
    CHECK(s.rows[0][0] == "0");
    CHECK(fs::exists(d / "series.csv"));
    CHECK(fs::exists(d / "outcome.csv"));
}

TEST_CASE("SHA-256 of a known string") {
    CHECK(sha256_hex("abc") == "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}
