#pragma once

#include <string>

#include "fslsim/baselines.hpp"
#include "fslsim/config.hpp"
#include "fslsim/sim.hpp"

namespace fslsim {

// Runs the configured algorithm.
RunResult run_algorithm(const RunConfig& cfg);

// run_algorithm plus the on-disk artifacts: metrics.csv, summary.json
// and config.ini (the effective config echoed back) inside outdir,
// which is created if needed.
RunResult run_and_write(const RunConfig& cfg, const std::string& outdir,
                        bool quiet);

struct SweepResult {
  // one row per grid point: axis values plus headline numbers
  std::string comparison_csv_path;
  std::size_t grid_points = 0;
};

// Cartesian product over the sweep axes. Every grid point runs in its
// own subdirectory of outdir; comparison.csv collects best accuracy,
// the round it was reached, bytes to the accuracy target (blank when
// never reached) and totals.
SweepResult sweep_and_write(const RunConfig& base, const SweepSpec& sweep,
                            const std::string& base_config_text,
                            const std::string& outdir, bool quiet);

// Round-count, best accuracy, bytes-to-target extraction shared by the
// sweep table and summary.json.
struct RunHeadline {
  double best_accuracy = 0.0;
  long best_accuracy_round = 0;
  long rounds_run = 0;
  std::uint64_t total_bytes = 0;
  // bytes at the end of the first round whose eval accuracy reached the
  // target; absent if never reached or target disabled
  std::optional<std::uint64_t> bytes_to_target;
};
RunHeadline summarize(const RunResult& result, double target_accuracy);

}  // namespace fslsim
