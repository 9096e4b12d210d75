#include "fslsim/runner.hpp"

#include <filesystem>
#include <fstream>
#include <iostream>

#include "json.hpp"
#include "fslsim/protocol.hpp"

namespace fslsim {

RunResult run_algorithm(const RunConfig& cfg) {
  cfg.validate();
  switch (cfg.algorithm) {
    case Algorithm::kFslSage:
      return run_fsl_sage(cfg);
    case Algorithm::kFedAvg:
      return run_fedavg(cfg);
    case Algorithm::kSplitFedMs:
      return run_splitfed(cfg, SplitFedMode::kMultiServer);
    case Algorithm::kSplitFedSs:
      return run_splitfed(cfg, SplitFedMode::kSingleServer);
    case Algorithm::kCseFsl:
      return run_cse_fsl(cfg);
  }
  throw ConfigError("unhandled algorithm");
}

RunHeadline summarize(const RunResult& result, double target_accuracy) {
  RunHeadline h;
  h.rounds_run = static_cast<long>(result.rows.size());
  h.total_bytes = result.ledger.total_bytes();
  for (const MetricsRow& row : result.rows) {
    if (row.eval_accuracy > h.best_accuracy) {
      h.best_accuracy = row.eval_accuracy;
      h.best_accuracy_round = row.round;
    }
    if (target_accuracy > 0.0 && !h.bytes_to_target &&
        row.eval_accuracy >= target_accuracy)
      h.bytes_to_target = row.cumulative_bytes;
  }
  return h;
}

namespace {

nlohmann::json config_json(const RunConfig& cfg) {
  nlohmann::json j = nlohmann::json::object();
  for (const auto& [section, rows] : config_rows(cfg)) {
    nlohmann::json s = nlohmann::json::object();
    for (const auto& [key, value] : rows) s[key] = value;
    j[section] = s;
  }
  return j;
}

void write_summary_json(const RunConfig& cfg, const RunResult& result,
                        const std::string& path) {
  const RunHeadline h = summarize(result, 0.0);
  nlohmann::json j;
  j["algorithm"] = to_string(cfg.algorithm);
  j["rounds_run"] = h.rounds_run;
  j["total_bytes"] = h.total_bytes;
  j["best_eval_accuracy"] = h.best_accuracy;
  j["best_eval_accuracy_round"] = h.best_accuracy_round;
  if (!result.rows.empty()) {
    const MetricsRow& last = result.rows.back();
    j["final_train_loss"] = last.train_loss;
    j["final_eval_loss"] = last.eval_loss;
    j["final_eval_accuracy"] = last.eval_accuracy;
    if (last.epsilon_t) j["final_epsilon"] = *last.epsilon_t;
    if (last.grad_norm_sq) j["final_grad_norm_sq"] = *last.grad_norm_sq;
  }
  nlohmann::json events = nlohmann::json::array();
  for (const AlignmentEvent& ev : result.alignment_events) {
    events.push_back({{"round", ev.round},
                      {"eps_before", ev.eps_before},
                      {"eps_after", ev.eps_after},
                      {"mean_final_loss", ev.mean_final_loss}});
  }
  j["alignment_events"] = events;
  j["config"] = config_json(cfg);
  std::ofstream f(path);
  if (!f) throw std::runtime_error("cannot open " + path + " for writing");
  f << j.dump(2) << '\n';
}

}  // namespace

RunResult run_and_write(const RunConfig& cfg, const std::string& outdir,
                        bool quiet) {
  std::filesystem::create_directories(outdir);
  RunResult result = run_algorithm(cfg);
  write_metrics_csv(result.rows, outdir + "/metrics.csv");
  write_summary_json(cfg, result, outdir + "/summary.json");
  std::ofstream echo(outdir + "/config.ini");
  if (!echo)
    throw std::runtime_error("cannot open " + outdir + "/config.ini");
  echo << emit_config(cfg);
  if (!quiet && !result.rows.empty()) {
    const MetricsRow& last = result.rows.back();
    std::cout << to_string(cfg.algorithm) << ": " << result.rows.size()
              << " rounds, final eval acc "
              << format_double(last.eval_accuracy) << ", "
              << result.ledger.total_bytes() << " bytes -> " << outdir
              << '\n';
  }
  return result;
}

SweepResult sweep_and_write(const RunConfig& base, const SweepSpec& sweep,
                            const std::string& base_config_text,
                            const std::string& outdir, bool quiet) {
  base.validate();
  std::filesystem::create_directories(outdir);

  std::vector<std::size_t> shape;
  std::size_t total = 1;
  for (const SweepAxis& axis : sweep.axes) {
    shape.push_back(axis.values.size());
    total *= axis.values.size();
  }

  std::string csv = "";
  for (const SweepAxis& axis : sweep.axes) csv += axis.key + ",";
  csv +=
      "best_accuracy,best_accuracy_round,bytes_to_target,rounds_run,"
      "total_bytes\n";

  for (std::size_t flat = 0; flat < total; ++flat) {
    // decode the flat index into one value per axis, last axis fastest
    std::vector<std::size_t> pick(sweep.axes.size());
    std::size_t rem = flat;
    for (std::size_t a = sweep.axes.size(); a-- > 0;) {
      pick[a] = rem % shape[a];
      rem /= shape[a];
    }

    auto kv = parse_ini(base_config_text);
    std::string dir_name;
    for (std::size_t a = 0; a < sweep.axes.size(); ++a) {
      const std::string& value = sweep.axes[a].values[pick[a]];
      set_config_value(kv, sweep.axes[a].key, value);
      if (!dir_name.empty()) dir_name += "__";
      dir_name += sweep.axes[a].key + "=" + value;
    }
    for (char& c : dir_name)
      if (c == '/' || c == ' ') c = '_';

    RunConfig cfg;
    try {
      cfg = build_config(kv);
    } catch (const ConfigError& e) {
      throw ConfigError("grid point '" + dir_name + "': " + e.what());
    }

    const std::string subdir = outdir + "/" + dir_name;
    const RunResult result = run_and_write(cfg, subdir, quiet);
    const RunHeadline h = summarize(result, sweep.target_accuracy);

    for (std::size_t a = 0; a < sweep.axes.size(); ++a)
      csv += sweep.axes[a].values[pick[a]] + ",";
    csv += format_double(h.best_accuracy) + "," +
           std::to_string(h.best_accuracy_round) + ",";
    if (h.bytes_to_target) csv += std::to_string(*h.bytes_to_target);
    csv += "," + std::to_string(h.rounds_run) + "," +
           std::to_string(h.total_bytes) + "\n";
  }

  SweepResult sr;
  sr.comparison_csv_path = outdir + "/comparison.csv";
  sr.grid_points = total;
  std::ofstream f(sr.comparison_csv_path);
  if (!f)
    throw std::runtime_error("cannot open " + sr.comparison_csv_path);
  f << csv;
  return sr;
}

}  // namespace fslsim
