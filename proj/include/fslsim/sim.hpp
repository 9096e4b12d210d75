#pragma once

// Shared harness for the federated training loops: dataset and model
// construction from a RunConfig, per-round measurement, and the result
// bundle every algorithm returns.

#include <optional>
#include <span>
#include <vector>

#include "fslsim/config.hpp"
#include "fslsim/data.hpp"
#include "fslsim/metrics.hpp"
#include "fslsim/models.hpp"

namespace fslsim {

struct AlignmentEvent {
  long round = 0;
  double eps_before = 0.0;
  double eps_after = 0.0;
  double mean_final_loss = 0.0;
};

struct RunResult {
  std::vector<MetricsRow> rows;
  CommLedger ledger;
  std::vector<AlignmentEvent> alignment_events;
  // Post-aggregation parameters after the last completed round.
  ParamVector final_client;
  ParamVector final_server;
  std::vector<ParamVector> final_aux;  // empty for algorithms without one
};

// Everything derived from a config before the first round runs. The
// same seeds give the same setup for every algorithm, so comparisons
// across algorithms share data, partition and initialization.
struct SimSetup {
  SplitSpec split;
  Dataset train;
  Dataset eval;
  Matrix probe_inputs;
  LabelVector probe_labels;
  std::vector<Shard> shards;
  ModelBundle bundle;
  std::vector<ParamVector> aux_inits;  // one per client
};

SimSetup build_setup(const RunConfig& cfg);

// Composes (client, server), measures train/eval loss, accuracy, the
// gradient estimation error (when aux params are supplied) and the
// full-gradient stationarity proxy on the probe batch.
MetricsRow measure_round(const RunConfig& cfg, const SimSetup& setup,
                         long round, const ParamVector& client,
                         const ParamVector& server,
                         std::span<const ParamVector> aux,
                         const CommLedger& ledger,
                         std::optional<double> alignment_loss);

// True once the round just finished should be the last (round budget or
// byte budget).
bool stop_after_round(const RunConfig& cfg, long round,
                      const CommLedger& ledger);

double accuracy(const MlpSpec& spec, const ParamVector& params,
                const Matrix& inputs, const LabelVector& labels);

double mean_loss(const MlpSpec& spec, const ParamVector& params,
                 const Matrix& inputs, const LabelVector& labels);

}  // namespace fslsim
