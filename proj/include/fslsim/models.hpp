#pragma once

#include <cstdint>
#include <utility>

#include "fslsim/mlp.hpp"

namespace fslsim {

// A full network split at cut_index: the client keeps layers
// [0, cut_index), the server keeps [cut_index, L). The auxiliary net
// consumes the cut-layer activations and carries the same head as the
// full network, standing in for the server during client updates.
struct SplitSpec {
  MlpSpec full;
  std::size_t cut_index = 1;
  MlpSpec aux;

  bool operator==(const SplitSpec&) const = default;

  std::size_t cut_dim() const { return full.layer_dims[cut_index]; }
  MlpSpec client_spec() const;
  MlpSpec server_spec() const;
  // Throws std::invalid_argument naming the violated constraint.
  void validate() const;
};

struct ModelBundle {
  MlpSpec client_spec;
  MlpSpec server_spec;
  MlpSpec aux_spec;
  ParamVector client_init;
  ParamVector server_init;
  ParamVector aux_init;
};

// Uniform(-a, a) weights with a = sqrt(6 / (fan_in + fan_out)), zero
// biases. Same seed, same bits.
ParamVector init_params(const MlpSpec& spec, std::uint64_t seed);

ModelBundle build_bundle(const SplitSpec& split, std::uint64_t seed);

// Concatenates client and server parameters into the full network's
// buffer (exact: pure copy, no arithmetic).
std::pair<MlpSpec, ParamVector> compose(const SplitSpec& split,
                                        const ParamVector& client,
                                        const ParamVector& server);

// Inverse of compose.
std::pair<ParamVector, ParamVector> decompose(const SplitSpec& split,
                                              const ParamVector& composed);

}  // namespace fslsim
