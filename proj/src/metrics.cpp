#include "fslsim/metrics.hpp"

#include <charconv>
#include <fstream>
#include <stdexcept>

namespace fslsim {

void CommLedger::charge(long round, Direction dir, Channel ch, int client_id,
                        std::uint64_t scalar_count) {
  if (round < 0) throw std::invalid_argument("negative round in ledger");
  events_.push_back({round, dir, ch, client_id, scalar_count});
  total_scalars_ += scalar_count;
}

std::uint64_t CommLedger::scalars(const Query& q) const {
  std::uint64_t total = 0;
  for (const CommEvent& e : events_) {
    if (q.round && e.round != *q.round) continue;
    if (q.direction && e.direction != *q.direction) continue;
    if (q.channel && e.channel != *q.channel) continue;
    if (q.client_id && e.client_id != *q.client_id) continue;
    total += e.scalar_count;
  }
  return total;
}

std::string format_double(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

std::string metrics_csv_header() {
  return "round,train_loss,eval_loss,eval_accuracy,cumulative_bytes,"
         "epsilon_t,grad_norm_sq,alignment_loss";
}

std::string metrics_csv_row(const MetricsRow& row) {
  std::string s = std::to_string(row.round);
  s += ',';
  s += format_double(row.train_loss);
  s += ',';
  s += format_double(row.eval_loss);
  s += ',';
  s += format_double(row.eval_accuracy);
  s += ',';
  s += std::to_string(row.cumulative_bytes);
  s += ',';
  if (row.epsilon_t) s += format_double(*row.epsilon_t);
  s += ',';
  if (row.grad_norm_sq) s += format_double(*row.grad_norm_sq);
  s += ',';
  if (row.alignment_loss) s += format_double(*row.alignment_loss);
  return s;
}

void write_metrics_csv(const std::vector<MetricsRow>& rows,
                       const std::string& path) {
  std::ofstream f(path);
  if (!f) throw std::runtime_error("cannot open " + path + " for writing");
  f << metrics_csv_header() << '\n';
  for (const MetricsRow& r : rows) f << metrics_csv_row(r) << '\n';
  if (!f) throw std::runtime_error("write to " + path + " failed");
}

double estimation_error(const MlpSpec& client_spec, const MlpSpec& aux_spec,
                        const MlpSpec& server_spec,
                        const ParamVector& client_params,
                        std::span<const ParamVector> aux_params,
                        const ParamVector& server_params,
                        const Matrix& probe_inputs,
                        const LabelVector& probe_labels) {
  if (aux_params.empty())
    throw std::invalid_argument("estimation_error needs at least one client");
  // z_f and the true pullback are shared by every client.
  const ForwardResult fwd = forward(client_spec, client_params, probe_inputs);
  const Matrix& z_f = fwd.output();
  const LossGrad server_eval =
      loss_and_grad(server_spec, server_params, z_f, probe_labels);
  const ParamVector g_true =
      vjp_params(client_spec, client_params, probe_inputs,
                 server_eval.grad_inputs);
  double total = 0.0;
  for (const ParamVector& aux : aux_params) {
    const LossGrad aux_eval = loss_and_grad(aux_spec, aux, z_f, probe_labels);
    const ParamVector g_hat = vjp_params(client_spec, client_params,
                                         probe_inputs, aux_eval.grad_inputs);
    double dist = 0.0;
    for (std::size_t i = 0; i < g_true.data.size(); ++i) {
      const double diff = g_hat.data[i] - g_true.data[i];
      dist += diff * diff;
    }
    total += dist;
  }
  return total / static_cast<double>(aux_params.size());
}

double grad_norm_sq(const MlpSpec& spec, const ParamVector& params,
                    const Matrix& probe_inputs,
                    const LabelVector& probe_labels) {
  const LossGrad lg = loss_and_grad(spec, params, probe_inputs, probe_labels);
  double total = 0.0;
  for (double g : lg.grad_params.data) total += g * g;
  return total;
}

double grad_norm_sq_split(const SplitSpec& split, const ParamVector& client,
                          const ParamVector& server,
                          const Matrix& probe_inputs,
                          const LabelVector& probe_labels) {
  auto [spec, params] = compose(split, client, server);
  return grad_norm_sq(spec, params, probe_inputs, probe_labels);
}

}  // namespace fslsim
