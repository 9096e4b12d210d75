#include "fslsim/sim.hpp"

#include <stdexcept>

#include "fslsim/detail/net_ops.hpp"
#include "fslsim/rng.hpp"

namespace fslsim {

SimSetup build_setup(const RunConfig& cfg) {
  cfg.validate();
  SimSetup s;
  s.split = cfg.split_spec();
  // one draw covers train and eval so both see the same class means;
  // rows are already shuffled, so a prefix/suffix split is unbiased
  const Dataset all =
      gen_gaussian_mixture(cfg.train_n + cfg.eval_n, cfg.dim, cfg.classes,
                           cfg.separation, mix_seed(cfg.seed_dataset, 0));
  auto slice = [&](std::size_t begin, std::size_t count) {
    Dataset d;
    d.num_classes = cfg.classes;
    d.inputs.resize(count, cfg.dim);
    d.labels.resize(count);
    for (std::size_t i = 0; i < count; ++i) {
      d.labels[i] = all.labels[begin + i];
      for (std::size_t j = 0; j < cfg.dim; ++j)
        d.inputs(i, j) = all.inputs(begin + i, j);
    }
    return d;
  };
  s.train = slice(0, cfg.train_n);
  s.eval = slice(cfg.train_n, cfg.eval_n);

  // probe = leading slice of the held-out set, fixed for the whole run
  s.probe_inputs.resize(cfg.probe_size, cfg.dim);
  s.probe_labels.resize(cfg.probe_size);
  for (std::size_t i = 0; i < cfg.probe_size; ++i) {
    s.probe_labels[i] = s.eval.labels[i];
    for (std::size_t j = 0; j < cfg.dim; ++j)
      s.probe_inputs(i, j) = s.eval.inputs(i, j);
  }

  if (cfg.partition == PartitionKind::kDirichlet)
    s.shards = dirichlet_partition(s.train.labels, cfg.clients,
                                   cfg.dirichlet_alpha, cfg.seed_partition);
  else
    s.shards = iid_partition(cfg.train_n, cfg.clients, cfg.seed_partition);

  s.bundle = build_bundle(s.split, cfg.seed_init);
  s.aux_inits.reserve(cfg.clients);
  for (std::size_t i = 0; i < cfg.clients; ++i) {
    if (cfg.aux_init_identical || i == 0)
      s.aux_inits.push_back(s.bundle.aux_init);
    else
      s.aux_inits.push_back(
          init_params(s.bundle.aux_spec, mix_seed(cfg.seed_init, 100 + i)));
  }
  return s;
}

double mean_loss(const MlpSpec& spec, const ParamVector& params,
                 const Matrix& inputs, const LabelVector& labels) {
  if (inputs.rows == 0) throw std::invalid_argument("empty batch");
  if (labels.size() != inputs.rows)
    throw std::invalid_argument("label count does not match batch size");
  return detail::loss_value(spec, params.data.data(), inputs, labels);
}

double accuracy(const MlpSpec& spec, const ParamVector& params,
                const Matrix& inputs, const LabelVector& labels) {
  const ForwardResult fwd = forward(spec, params, inputs);
  const Matrix& out = fwd.output();
  std::size_t hits = 0;
  for (std::size_t i = 0; i < out.rows; ++i) {
    std::size_t arg = 0;
    for (std::size_t j = 1; j < out.cols; ++j)
      if (out(i, j) > out(i, arg)) arg = j;
    if (static_cast<std::int64_t>(arg) == labels[i]) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(out.rows);
}

MetricsRow measure_round(const RunConfig& cfg, const SimSetup& setup,
                         long round, const ParamVector& client,
                         const ParamVector& server,
                         std::span<const ParamVector> aux,
                         const CommLedger& ledger,
                         std::optional<double> alignment_loss) {
  MetricsRow row;
  row.round = round;
  auto [full_spec, full_params] = compose(setup.split, client, server);
  row.train_loss =
      mean_loss(full_spec, full_params, setup.train.inputs, setup.train.labels);
  row.eval_loss =
      mean_loss(full_spec, full_params, setup.eval.inputs, setup.eval.labels);
  row.eval_accuracy =
      accuracy(full_spec, full_params, setup.eval.inputs, setup.eval.labels);
  row.cumulative_bytes = ledger.total_bytes();
  if (!aux.empty()) {
    row.epsilon_t = estimation_error(
        setup.bundle.client_spec, setup.bundle.aux_spec,
        setup.bundle.server_spec, client, aux, server, setup.probe_inputs,
        setup.probe_labels);
  }
  row.grad_norm_sq = grad_norm_sq(full_spec, full_params, setup.probe_inputs,
                                  setup.probe_labels);
  row.alignment_loss = alignment_loss;
  (void)cfg;
  return row;
}

bool stop_after_round(const RunConfig& cfg, long round,
                      const CommLedger& ledger) {
  if (round + 1 >= cfg.rounds) return true;
  if (cfg.max_bytes > 0 && ledger.total_bytes() >= cfg.max_bytes) return true;
  return false;
}

}  // namespace fslsim
