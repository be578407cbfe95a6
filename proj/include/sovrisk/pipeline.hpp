#pragma once

#include "sovrisk/panel.hpp"

#include <cstdint>
#include <string>

namespace sovrisk {

// Configuration shared by the pipeline commands; mirrors the JSON config
// file. CLI flags override individual fields.
struct RunConfig {
    // inputs
    std::string ratings_csv;
    std::string rates_csv;
    std::string scale_json;  // empty: use the bundled three-agency scale
    std::string agency;
    SpreadUnit unit = SpreadUnit::Percent;

    // change-point analysis
    double alpha = 0.05;
    int bootstrap_reps = 199;
    int k_max = 3;
    std::int64_t min_seg = 0;  // 0: default D^2 transition slots
    bool two_stage = false;
    std::int64_t stride = 21;

    // simulation
    std::int64_t horizon_steps = 1095;
    int iterations = 200;
    std::int64_t cov_time = -1;  // -1: horizon/2
    bool drift_adjustment = false;
    std::int64_t second_moment_draws = 4000;

    // run control
    std::uint64_t seed = 0;
    int threads = 1;
    std::string out = "out";

    static RunConfig from_json_file(const std::string& path);
};

// Each command reads its upstream artifacts from cfg.out and writes its
// own outputs there. They throw std::invalid_argument for missing or
// malformed inputs and std::runtime_error for computation failures; the
// CLI maps these to exit codes 2 and 3.
void cmd_ingest(const RunConfig& cfg);
void cmd_changepoint(const RunConfig& cfg);
void cmd_estimate(const RunConfig& cfg);
void cmd_simulate(const RunConfig& cfg);
void cmd_report(const RunConfig& cfg);

}  // namespace sovrisk
