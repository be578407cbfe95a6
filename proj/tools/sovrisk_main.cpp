#include "sovrisk/pipeline.hpp"

#include <CLI11.hpp>

#include <cstdint>
#include <exception>
#include <functional>
#include <iostream>
#include <string>

namespace {

constexpr int kExitOk = 0;
constexpr int kExitValidation = 2;
constexpr int kExitComputation = 3;

struct GlobalArgs {
    std::string config;
    std::string out;
    std::uint64_t seed = 0;
    bool seed_set = false;
    int threads = 0;
    bool threads_set = false;
};

sovrisk::RunConfig build_config(const GlobalArgs& g) {
    sovrisk::RunConfig cfg;
    if (!g.config.empty()) cfg = sovrisk::RunConfig::from_json_file(g.config);
    if (!g.out.empty()) cfg.out = g.out;
    if (g.seed_set) cfg.seed = g.seed;
    if (g.threads_set) cfg.threads = g.threads;
    return cfg;
}

int run_command(const std::function<void()>& body) {
    try {
        body();
        return kExitOk;
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitValidation;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitComputation;
    }
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Sovereign credit risk pipeline: piecewise-Markov rating dynamics, "
                 "copula-coupled spreads, Theil inequality and total-spread measures"};
    app.require_subcommand(1);

    GlobalArgs g;
    app.add_option("--config", g.config, "JSON run configuration")->expected(1);
    app.add_option("--out", g.out, "output directory (overrides config)");
    auto* seed_opt = app.add_option("--seed", g.seed, "top-level RNG seed (overrides config)");
    auto* threads_opt = app.add_option("--threads", g.threads, "worker threads (0 = hardware)");

    std::string ratings_csv, rates_csv, scale_json, agency, unit;
    auto* ingest = app.add_subcommand("ingest", "read rating/rate CSVs, build aligned panels");
    ingest->add_option("--ratings", ratings_csv, "ratings.csv (date,country,agency,label)");
    ingest->add_option("--rates", rates_csv, "rates.csv (date,country,rate)");
    ingest->add_option("--scale", scale_json, "scale.json (agency -> ordered labels)");
    ingest->add_option("--agency", agency, "rating agency to select");
    ingest->add_option("--unit", unit, "spread unit: percent | bp");

    int k_max = -1, bootstrap_reps = -1;
    double alpha = -1.0;
    bool two_stage = false;
    auto* changepoint = app.add_subcommand("changepoint", "detect structural breaks (BIC + bootstrap LRT)");
    changepoint->add_option("--kmax", k_max, "largest break count to consider");
    changepoint->add_option("--reps", bootstrap_reps, "bootstrap replicates");
    changepoint->add_option("--alpha", alpha, "test level");
    changepoint->add_flag("--two-stage", two_stage, "coarse-grid search with local refinement");

    auto* estimate = app.add_subcommand("estimate", "estimate segment matrices, marginals and copula");

    std::int64_t horizon = -1, cov_time = -2;
    int iterations = -1;
    bool drift = false;
    auto* simulate = app.add_subcommand("simulate", "Monte Carlo rating+spread simulation");
    simulate->add_option("--horizon", horizon, "simulation steps");
    simulate->add_option("--iterations", iterations, "Monte Carlo iterations");
    simulate->add_option("--cov-time", cov_time, "snapshot step for the covariance matrix");
    simulate->add_flag("--drift", drift, "apply the observed mean relative spread variation");

    auto* report = app.add_subcommand("report", "summary.json, risk tables and SVG charts");

    CLI11_PARSE(app, argc, argv);
    g.seed_set = seed_opt->count() > 0;
    g.threads_set = threads_opt->count() > 0;

    return run_command([&] {
        sovrisk::RunConfig cfg = build_config(g);
        if (ingest->parsed()) {
            if (!ratings_csv.empty()) cfg.ratings_csv = ratings_csv;
            if (!rates_csv.empty()) cfg.rates_csv = rates_csv;
            if (!scale_json.empty()) cfg.scale_json = scale_json;
            if (!agency.empty()) cfg.agency = agency;
            if (!unit.empty()) cfg.unit = sovrisk::spread_unit_from_string(unit);
            sovrisk::cmd_ingest(cfg);
        } else if (changepoint->parsed()) {
            if (k_max >= 0) cfg.k_max = k_max;
            if (bootstrap_reps >= 0) cfg.bootstrap_reps = bootstrap_reps;
            if (alpha > 0.0) cfg.alpha = alpha;
            if (two_stage) cfg.two_stage = true;
            sovrisk::cmd_changepoint(cfg);
        } else if (estimate->parsed()) {
            sovrisk::cmd_estimate(cfg);
        } else if (simulate->parsed()) {
            if (horizon > 0) cfg.horizon_steps = horizon;
            if (iterations > 0) cfg.iterations = iterations;
            if (cov_time >= -1) cfg.cov_time = cov_time;
            if (drift) cfg.drift_adjustment = true;
            sovrisk::cmd_simulate(cfg);
        } else if (report->parsed()) {
            sovrisk::cmd_report(cfg);
        }
    });
}
