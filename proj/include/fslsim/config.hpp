#pragma once

#include <cstdint>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "fslsim/mlp.hpp"
#include "fslsim/models.hpp"

namespace fslsim {

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

enum class Algorithm { kFslSage, kFedAvg, kSplitFedMs, kSplitFedSs, kCseFsl };
enum class PartitionKind { kDirichlet, kIid };

std::string to_string(Algorithm a);
std::string to_string(PartitionKind p);

// Full description of one run. Field groups mirror the config file
// sections; see emit_config for the canonical key names.
struct RunConfig {
  // [run]
  Algorithm algorithm = Algorithm::kFslSage;
  long rounds = 30;                 // T
  std::size_t clients = 4;          // m
  std::uint64_t max_bytes = 0;      // stop once cumulative bytes reach this; 0 = off

  // [protocol]
  long local_steps = 10;            // K, client steps per round
  long uplinks = 2;                 // Q, smashed-batch sends per client round
  long align_every = 5;             // l, alignment period in rounds
  long align_until = -1;            // last round eligible for alignment; -1 = rounds
  double server_lr = 0.05;
  double client_lr = 0.05;
  long align_steps = 50;
  double align_lr = 0.05;
  std::size_t store_capacity = 0;   // records kept per client; 0 = unbounded

  // [data]
  std::size_t train_n = 8000;
  std::size_t eval_n = 2000;
  std::size_t dim = 20;
  std::size_t classes = 5;
  double separation = 6.0;
  std::size_t batch_size = 64;
  PartitionKind partition = PartitionKind::kDirichlet;
  double dirichlet_alpha = 1.0;

  // [model]
  std::vector<std::size_t> layer_dims = {20, 32, 16, 5};
  std::vector<Activation> activations = {Activation::kTanh, Activation::kTanh,
                                         Activation::kIdentity};
  Head head = Head::kSoftmaxXent;
  std::size_t cut_index = 1;
  std::vector<std::size_t> aux_layer_dims = {32, 16, 5};
  std::vector<Activation> aux_activations = {Activation::kTanh,
                                             Activation::kIdentity};
  bool aux_init_identical = true;

  // [metrics]
  std::size_t probe_size = 512;

  // [seeds]
  std::uint64_t seed_dataset = 1;
  std::uint64_t seed_partition = 2;
  std::uint64_t seed_init = 3;
  std::uint64_t seed_streams = 4;

  bool operator==(const RunConfig&) const = default;

  SplitSpec split_spec() const;
  // Throws ConfigError naming the violated constraint.
  void validate() const;
};

// Flat INI: [section] headers, key = value lines, # or ; comments.
// List values are whitespace- or comma-separated. local_steps accepts
// the word "epoch" (one pass over the mean shard per round) and
// align_until accepts "rounds"; both are resolved to numbers at parse
// time, so the emitted echo always shows effective values.
RunConfig parse_config(const std::string& text);
RunConfig load_config_file(const std::string& path);

// Canonical form: every key explicit, fixed order. Stable under
// parse(emit(cfg)) == cfg.
std::string emit_config(const RunConfig& cfg);

// Same content as emit_config, exposed as (section, key, value) rows for
// the JSON echo in run summaries.
std::vector<std::pair<std::string, std::vector<std::pair<std::string, std::string>>>>
config_rows(const RunConfig& cfg);

// Replaces one value addressed as "section.key" (sweep override). The
// value may use commas where the grammar wants spaces.
void set_config_value(std::map<std::string, std::map<std::string, std::string>>& kv,
                      const std::string& dotted_key, const std::string& value);

// Raw key/value view of a config file, as consumed by parse_config.
std::map<std::string, std::map<std::string, std::string>> parse_ini(
    const std::string& text);
RunConfig build_config(
    const std::map<std::string, std::map<std::string, std::string>>& kv);

struct SweepAxis {
  std::string key;                  // "section.key"
  std::vector<std::string> values;  // grid points, verbatim tokens
};

struct SweepSpec {
  std::vector<SweepAxis> axes;
  double target_accuracy = 0.0;  // 0 disables bytes-to-target reporting
};

// Sweep files hold one [sweep] section with repeated
//   axis = <section.key> <v1> <v2> ...
// lines and an optional target_accuracy.
SweepSpec parse_sweep_spec(const std::string& text);
SweepSpec load_sweep_file(const std::string& path);

// Seed pack derived from a single override seed (CLI --seed-override).
void apply_seed_override(RunConfig& cfg, std::uint64_t seed);

}  // namespace fslsim
