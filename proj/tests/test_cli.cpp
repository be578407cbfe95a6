#include <catch2/catch_amalgamated.hpp>

#include "fixture.hpp"

#include <nlohmann/json.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

const fs::path kWork = fs::temp_directory_path() / "sovrisk_cli_test";

int run_cli(const std::string& args) {
    const std::string cmd =
        std::string(SOVRISK_CLI_PATH) + " " + args + " 2>>" + (kWork / "stderr.log").string();
    const int status = std::system(cmd.c_str());
    if (status == -1) return -1;
    return WEXITSTATUS(status);
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    REQUIRE(in);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

json load(const fs::path& p) {
    std::ifstream in(p);
    REQUIRE(in);
    json j;
    in >> j;
    return j;
}

// Validates the subset of JSON Schema used by schema/summary.schema.json:
// type (string or list), required, properties, items.
bool validates(const json& value, const json& schema, std::string* why) {
    if (schema.contains("type")) {
        auto matches = [&](const std::string& t) {
            if (t == "object") return value.is_object();
            if (t == "array") return value.is_array();
            if (t == "string") return value.is_string();
            if (t == "integer") return value.is_number_integer() || value.is_number_unsigned();
            if (t == "number") return value.is_number();
            if (t == "boolean") return value.is_boolean();
            if (t == "null") return value.is_null();
            return false;
        };
        bool ok = false;
        if (schema["type"].is_string())
            ok = matches(schema["type"].get<std::string>());
        else
            for (const auto& t : schema["type"]) ok = ok || matches(t.get<std::string>());
        if (!ok) {
            *why = "type mismatch against " + schema["type"].dump() + " for " + value.dump();
            return false;
        }
    }
    if (schema.contains("required"))
        for (const auto& key : schema["required"])
            if (!value.contains(key.get<std::string>())) {
                *why = "missing required key " + key.get<std::string>();
                return false;
            }
    if (schema.contains("properties") && value.is_object())
        for (const auto& [key, sub] : schema["properties"].items())
            if (value.contains(key))
                if (!validates(value.at(key), sub, why)) {
                    *why = key + ": " + *why;
                    return false;
                }
    if (schema.contains("items") && value.is_array())
        for (const auto& item : value)
            if (!validates(item, schema["items"], why)) return false;
    return true;
}

void write_config(const fs::path& path, const fs::path& fixture, const fs::path& out,
                  std::uint64_t seed, int threads) {
    json cfg;
    cfg["ratings_csv"] = (fixture / "ratings.csv").string();
    cfg["rates_csv"] = (fixture / "rates.csv").string();
    cfg["scale_json"] = (fixture / "scale.json").string();
    cfg["agency"] = "S&P";
    cfg["unit"] = "percent";
    cfg["alpha"] = 0.05;
    cfg["bootstrap_reps"] = 19;
    cfg["k_max"] = 2;
    cfg["min_seg"] = 40;
    cfg["seed"] = seed;
    cfg["threads"] = threads;
    cfg["out"] = out.string();
    cfg["simulation"] = {{"horizon_steps", 120},
                         {"iterations", 40},
                         {"cov_time", -1},
                         {"drift_adjustment", false},
                         {"second_moment_draws", 400}};
    std::ofstream f(path);
    f << cfg.dump(2) << '\n';
}

void run_full_pipeline(const fs::path& cfg_path) {
    REQUIRE(run_cli("--config " + cfg_path.string() + " ingest") == 0);
    REQUIRE(run_cli("--config " + cfg_path.string() + " changepoint") == 0);
    REQUIRE(run_cli("--config " + cfg_path.string() + " estimate") == 0);
    REQUIRE(run_cli("--config " + cfg_path.string() + " simulate") == 0);
    REQUIRE(run_cli("--config " + cfg_path.string() + " report") == 0);
}

}  // namespace

TEST_CASE("full pipeline produces the expected artifacts") {
    fs::remove_all(kWork);
    fs::create_directories(kWork);
    const fs::path fixture = kWork / "fixture";
    sovrisk::testfixture::write_fixture({fixture, 1, 400, 200});
    const fs::path out = kWork / "out";
    const fs::path cfg = kWork / "config.json";
    write_config(cfg, fixture, out, 4242, 1);

    run_full_pipeline(cfg);

    for (const char* name :
         {"ratings_panel.csv", "spreads_panel.csv", "panel_meta.json", "changepoints.json",
          "matrix_seg0.csv", "matrix_seg0.json", "marginals.csv", "copula.csv", "theil_path.csv",
          "totals.csv", "correlation_sim.csv", "simulate_meta.json", "summary.json",
          "total_spread.csv", "covariance.csv", "correlation_model.csv", "theil_path.svg",
          "total_spread.svg", "delta_total_spread.svg"}) {
        INFO(name);
        CHECK(fs::exists(out / name));
    }

    const json meta = load(out / "panel_meta.json");
    CHECK(meta["agency"] == "S&P");
    CHECK(meta["dim"] == 8);
    CHECK(meta["countries"].size() == 5);

    const json cp = load(out / "changepoints.json");
    CHECK(cp["bic_by_k"].size() >= 1);
    CHECK(cp.contains("lambda"));

    // theil_path.csv has a header and one row per step
    std::istringstream theil(slurp(out / "theil_path.csv"));
    std::string line;
    std::getline(theil, line);
    CHECK(line == "t,mean_DT,q05,q95,inter,intra");
    int rows = 0;
    while (std::getline(theil, line))
        if (!line.empty()) ++rows;
    CHECK(rows == 121);
}

TEST_CASE("summary validates against the shipped schema") {
    const fs::path out = kWork / "out";
    REQUIRE(fs::exists(out / "summary.json"));
    const json schema = load(fs::path(SOVRISK_SCHEMA_DIR) / "summary.schema.json");
    const json summary = load(out / "summary.json");
    std::string why;
    const bool ok = validates(summary, schema, &why);
    INFO(why);
    CHECK(ok);
}

TEST_CASE("simulate is byte-identical across repeat runs and worker counts") {
    const fs::path fixture = kWork / "fixture";
    const fs::path out1 = kWork / "det1";
    const fs::path out2 = kWork / "det2";
    const fs::path cfg1 = kWork / "config_det1.json";
    const fs::path cfg2 = kWork / "config_det2.json";
    write_config(cfg1, fixture, out1, 777, 1);
    write_config(cfg2, fixture, out2, 777, 4);  // different worker count

    run_full_pipeline(cfg1);
    run_full_pipeline(cfg2);

    for (const char* name : {"theil_path.csv", "totals.csv", "correlation_sim.csv",
                             "changepoints.json", "summary.json", "covariance.csv"}) {
        INFO(name);
        CHECK(slurp(out1 / name) == slurp(out2 / name));
    }

    // re-running simulate in place rewrites identical bytes
    const std::string before = slurp(out1 / "theil_path.csv");
    REQUIRE(run_cli("--config " + cfg1.string() + " simulate") == 0);
    CHECK(slurp(out1 / "theil_path.csv") == before);
}

TEST_CASE("kmax zero reports only the homogeneous fit") {
    const fs::path cfg = kWork / "config.json";
    REQUIRE(run_cli("--config " + cfg.string() + " changepoint --kmax 0") == 0);
    const json cp = load((kWork / "out") / "changepoints.json");
    CHECK(cp["k"] == 0);
    CHECK(cp["bic_by_k"].size() == 1);
    CHECK(cp["p_value"] == 1.0);
}

TEST_CASE("missing or invalid inputs exit with code 2") {
    CHECK(run_cli("--config /nonexistent/config.json ingest") == 2);
    CHECK(run_cli("--out " + (kWork / "empty_out").string() + " changepoint") == 2);

    // unreadable ratings file
    const fs::path cfg = kWork / "bad_config.json";
    write_config(cfg, kWork / "missing_fixture", kWork / "bad_out", 1, 1);
    CHECK(run_cli("--config " + cfg.string() + " ingest") == 2);
}

TEST_CASE("seed flag overrides the config seed") {
    const fs::path fixture = kWork / "fixture";
    const fs::path out_a = kWork / "seed_a";
    const fs::path out_b = kWork / "seed_b";
    const fs::path cfg_a = kWork / "config_seed_a.json";
    const fs::path cfg_b = kWork / "config_seed_b.json";
    write_config(cfg_a, fixture, out_a, 1, 1);
    write_config(cfg_b, fixture, out_b, 2, 1);

    REQUIRE(run_cli("--config " + cfg_a.string() + " ingest") == 0);
    REQUIRE(run_cli("--config " + cfg_a.string() + " changepoint --kmax 0") == 0);
    REQUIRE(run_cli("--config " + cfg_a.string() + " estimate") == 0);
    REQUIRE(run_cli("--config " + cfg_a.string() + " simulate") == 0);

    REQUIRE(run_cli("--config " + cfg_b.string() + " ingest") == 0);
    REQUIRE(run_cli("--config " + cfg_b.string() + " changepoint --kmax 0") == 0);
    REQUIRE(run_cli("--config " + cfg_b.string() + " estimate") == 0);
    // same seed as config A forces identical simulation output
    REQUIRE(run_cli("--config " + cfg_b.string() + " --seed 1 simulate") == 0);
    CHECK(slurp(out_a / "theil_path.csv") == slurp(out_b / "theil_path.csv"));
}
