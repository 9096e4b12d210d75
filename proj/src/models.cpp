#include "fslsim/models.hpp"

#include <cmath>
#include <stdexcept>

#include "fslsim/rng.hpp"

namespace fslsim {

MlpSpec SplitSpec::client_spec() const {
  MlpSpec c;
  c.layer_dims.assign(full.layer_dims.begin(),
                      full.layer_dims.begin() + cut_index + 1);
  c.activations.assign(full.activations.begin(),
                       full.activations.begin() + cut_index);
  c.head = Head::kNone;
  return c;
}

MlpSpec SplitSpec::server_spec() const {
  MlpSpec s;
  s.layer_dims.assign(full.layer_dims.begin() + cut_index,
                      full.layer_dims.end());
  s.activations.assign(full.activations.begin() + cut_index,
                       full.activations.end());
  s.head = full.head;
  return s;
}

void SplitSpec::validate() const {
  full.validate();
  if (full.head == Head::kNone)
    throw std::invalid_argument("full network must have a loss head");
  if (cut_index < 1 || cut_index >= full.layer_count())
    throw std::invalid_argument(
        "cut_index must satisfy 1 <= cut_index < layer count");
  aux.validate();
  if (aux.input_dim() != cut_dim())
    throw std::invalid_argument(
        "aux input dim must equal the cut layer width");
  if (aux.head != full.head)
    throw std::invalid_argument("aux head must match the full network head");
}

ParamVector init_params(const MlpSpec& spec, std::uint64_t seed) {
  spec.validate();
  ParamVector p = zeros_like(spec);
  Rng rng(seed);
  std::size_t off = 0;
  for (std::size_t l = 0; l + 1 < spec.layer_dims.size(); ++l) {
    const std::size_t fan_in = spec.layer_dims[l];
    const std::size_t fan_out = spec.layer_dims[l + 1];
    const double a = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
    for (std::size_t i = 0; i < fan_in * fan_out; ++i)
      p.data[off + i] = rng.uniform(-a, a);
    off += fan_in * fan_out + fan_out;  // biases stay zero
  }
  return p;
}

ModelBundle build_bundle(const SplitSpec& split, std::uint64_t seed) {
  split.validate();
  ModelBundle b;
  b.client_spec = split.client_spec();
  b.server_spec = split.server_spec();
  b.aux_spec = split.aux;
  b.client_init = init_params(b.client_spec, mix_seed(seed, 1));
  b.server_init = init_params(b.server_spec, mix_seed(seed, 2));
  b.aux_init = init_params(b.aux_spec, mix_seed(seed, 3));
  return b;
}

std::pair<MlpSpec, ParamVector> compose(const SplitSpec& split,
                                        const ParamVector& client,
                                        const ParamVector& server) {
  split.validate();
  const MlpSpec cs = split.client_spec();
  const MlpSpec ss = split.server_spec();
  if (client.size() != cs.param_count() || client.manifest != cs.manifest())
    throw std::invalid_argument("client params do not match the split");
  if (server.size() != ss.param_count() || server.manifest != ss.manifest())
    throw std::invalid_argument("server params do not match the split");
  ParamVector full;
  full.manifest = split.full.manifest();
  full.data.reserve(client.size() + server.size());
  full.data.insert(full.data.end(), client.data.begin(), client.data.end());
  full.data.insert(full.data.end(), server.data.begin(), server.data.end());
  return {split.full, std::move(full)};
}

std::pair<ParamVector, ParamVector> decompose(const SplitSpec& split,
                                              const ParamVector& composed) {
  split.validate();
  if (composed.size() != split.full.param_count())
    throw std::invalid_argument("composed params do not match the split");
  const MlpSpec cs = split.client_spec();
  const MlpSpec ss = split.server_spec();
  ParamVector client, server;
  client.manifest = cs.manifest();
  server.manifest = ss.manifest();
  const std::size_t nc = cs.param_count();
  client.data.assign(composed.data.begin(), composed.data.begin() + nc);
  server.data.assign(composed.data.begin() + nc, composed.data.end());
  return {std::move(client), std::move(server)};
}

}  // namespace fslsim
