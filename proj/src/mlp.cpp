#include "fslsim/mlp.hpp"

#include <cmath>
#include <stdexcept>

#include "fslsim/detail/net_ops.hpp"

namespace fslsim {

bool all_finite(const Matrix& m) {
  for (double v : m.data)
    if (!std::isfinite(v)) return false;
  return true;
}

void require_finite(const Matrix& m, const char* what) {
  if (!all_finite(m))
    throw std::invalid_argument(std::string(what) + " has non-finite entries");
}

namespace {

void require_finite(const std::vector<double>& v, const char* what) {
  for (double x : v)
    if (!std::isfinite(x))
      throw std::invalid_argument(std::string(what) +
                                  " has non-finite entries");
}

void check_eval_args(const MlpSpec& spec, const ParamVector& params,
                     const Matrix& inputs) {
  spec.validate();
  if (params.size() != spec.param_count())
    throw std::invalid_argument("params size does not match spec");
  if (inputs.cols != spec.input_dim())
    throw std::invalid_argument("input width does not match spec");
  if (inputs.rows == 0) throw std::invalid_argument("empty batch");
  require_finite(params.data, "params");
  fslsim::require_finite(inputs, "inputs");
}

void check_labels(const MlpSpec& spec, const Matrix& inputs,
                  const LabelVector& labels) {
  if (labels.size() != inputs.rows)
    throw std::invalid_argument("label count does not match batch size");
  if (spec.head == Head::kMse && spec.output_dim() == 1) return;
  for (auto y : labels)
    if (y < 0 || static_cast<std::size_t>(y) >= spec.output_dim())
      throw std::invalid_argument("label out of range for output dim");
}

}  // namespace

std::size_t MlpSpec::param_count() const {
  std::size_t n = 0;
  for (std::size_t l = 0; l + 1 < layer_dims.size(); ++l)
    n += layer_dims[l] * layer_dims[l + 1] + layer_dims[l + 1];
  return n;
}

std::vector<MatShape> MlpSpec::manifest() const {
  std::vector<MatShape> shapes;
  for (std::size_t l = 0; l + 1 < layer_dims.size(); ++l) {
    shapes.push_back({layer_dims[l], layer_dims[l + 1]});
    shapes.push_back({1, layer_dims[l + 1]});
  }
  return shapes;
}

void MlpSpec::validate() const {
  if (layer_dims.size() < 2)
    throw std::invalid_argument("network needs at least one layer");
  if (activations.size() != layer_dims.size() - 1)
    throw std::invalid_argument(
        "activation count must equal layer count (dims - 1)");
  for (std::size_t d : layer_dims)
    if (d == 0) throw std::invalid_argument("layer dims must be positive");
}

ParamVector zeros_like(const MlpSpec& spec) {
  ParamVector p;
  p.data.assign(spec.param_count(), 0.0);
  p.manifest = spec.manifest();
  return p;
}

std::vector<Matrix> unflatten(const ParamVector& params) {
  std::vector<Matrix> blocks;
  std::size_t off = 0;
  for (const MatShape& s : params.manifest) {
    Matrix m(s.rows, s.cols);
    for (std::size_t i = 0; i < m.size(); ++i) m.data[i] = params.data[off + i];
    off += m.size();
    blocks.push_back(std::move(m));
  }
  if (off != params.data.size())
    throw std::invalid_argument("manifest does not cover the flat buffer");
  return blocks;
}

ParamVector flatten(const std::vector<Matrix>& blocks) {
  ParamVector p;
  for (const Matrix& m : blocks) {
    p.manifest.push_back({m.rows, m.cols});
    p.data.insert(p.data.end(), m.data.begin(), m.data.end());
  }
  return p;
}

ForwardResult forward(const MlpSpec& spec, const ParamVector& params,
                      const Matrix& inputs) {
  check_eval_args(spec, params, inputs);
  ForwardResult r;
  detail::forward_pass(spec, params.data.data(), inputs, r.activations);
  return r;
}

LossGrad loss_and_grad(const MlpSpec& spec, const ParamVector& params,
                       const Matrix& inputs, const LabelVector& labels) {
  check_eval_args(spec, params, inputs);
  check_labels(spec, inputs, labels);
  if (spec.head == Head::kNone)
    throw std::invalid_argument("loss requires a head (spec.head is none)");
  LossGrad out;
  out.grad_params.manifest = spec.manifest();
  out.loss = detail::loss_and_grad_impl(spec, params.data.data(), inputs,
                                        labels, out.grad_params.data,
                                        out.grad_inputs);
  if (!std::isfinite(out.loss))
    throw std::invalid_argument("loss is non-finite");
  return out;
}

ParamVector vjp_params(const MlpSpec& spec, const ParamVector& params,
                       const Matrix& inputs, const Matrix& cotangent) {
  check_eval_args(spec, params, inputs);
  if (spec.head != Head::kNone)
    throw std::invalid_argument("vjp_params expects a headless sub-network");
  if (cotangent.rows != inputs.rows || cotangent.cols != spec.output_dim())
    throw std::invalid_argument("cotangent shape does not match output");
  require_finite(cotangent, "cotangent");
  std::vector<Matrix> acts;
  detail::forward_pass(spec, params.data.data(), inputs, acts);
  ParamVector g = zeros_like(spec);
  detail::backward_pass<double>(spec, params.data.data(), acts, cotangent,
                                g.data.data(), nullptr);
  return g;
}

ParamVector fd_grad(const std::function<double(const ParamVector&)>& f,
                    const ParamVector& params, double step) {
  if (!(step > 0.0)) throw std::invalid_argument("fd step must be > 0");
  ParamVector g = params;
  ParamVector probe = params;
  for (std::size_t i = 0; i < params.data.size(); ++i) {
    const double orig = params.data[i];
    probe.data[i] = orig + step;
    const double fp = f(probe);
    probe.data[i] = orig - step;
    const double fm = f(probe);
    probe.data[i] = orig;
    g.data[i] = (fp - fm) / (2.0 * step);
  }
  return g;
}

ParamVector sgd_step(const ParamVector& params, const ParamVector& grad,
                     double lr) {
  if (params.manifest != grad.manifest || params.size() != grad.size())
    throw std::invalid_argument("sgd_step shape mismatch");
  if (!(lr >= 0.0)) throw std::invalid_argument("learning rate must be >= 0");
  ParamVector out = params;
  for (std::size_t i = 0; i < out.data.size(); ++i)
    out.data[i] -= lr * grad.data[i];
  return out;
}

std::string to_string(Activation a) {
  switch (a) {
    case Activation::kIdentity: return "identity";
    case Activation::kRelu: return "relu";
    case Activation::kTanh: return "tanh";
  }
  return "?";
}

std::string to_string(Head h) {
  switch (h) {
    case Head::kNone: return "none";
    case Head::kSoftmaxXent: return "softmax_xent";
    case Head::kMse: return "mse";
  }
  return "?";
}

}  // namespace fslsim
