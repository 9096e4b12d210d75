#pragma once

// Test-side oracles. Everything here recomputes results with straight
// per-element loops, independent of the production kernels, so the two
// can disagree.

#include <cmath>
#include <stdexcept>
#include <vector>

#include "fslsim/matrix.hpp"
#include "fslsim/mlp.hpp"
#include "fslsim/rng.hpp"

namespace testutil {

using fslsim::Activation;
using fslsim::Head;
using fslsim::LabelVector;
using fslsim::Matrix;
using fslsim::MlpSpec;
using fslsim::ParamVector;

inline double norm(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x * x;
  return std::sqrt(s);
}

inline double rel_err(const std::vector<double>& a,
                      const std::vector<double>& b) {
  if (a.size() != b.size()) throw std::invalid_argument("size mismatch");
  std::vector<double> d(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) d[i] = a[i] - b[i];
  const double scale = std::max(norm(a), norm(b));
  return norm(d) / std::max(scale, 1e-12);
}

struct NaiveForward {
  std::vector<Matrix> preacts;  // per layer, before activation
  std::vector<Matrix> acts;     // acts[0] = input
  double min_relu_margin = 1e300;
  const Matrix& output() const { return acts.back(); }
};

// Plain re-implementation of the forward pass from the unflattened
// blocks.
inline NaiveForward naive_forward(const MlpSpec& spec,
                                  const ParamVector& params,
                                  const Matrix& x) {
  const std::vector<Matrix> blocks = fslsim::unflatten(params);
  NaiveForward nf;
  nf.acts.push_back(x);
  for (std::size_t l = 0; l < spec.layer_count(); ++l) {
    const Matrix& w = blocks[2 * l];
    const Matrix& b = blocks[2 * l + 1];
    const Matrix& in = nf.acts.back();
    Matrix z(in.rows, w.cols);
    for (std::size_t i = 0; i < in.rows; ++i)
      for (std::size_t j = 0; j < w.cols; ++j) {
        double acc = b(0, j);
        for (std::size_t k = 0; k < w.rows; ++k) acc += in(i, k) * w(k, j);
        z(i, j) = acc;
      }
    nf.preacts.push_back(z);
    Matrix a = z;
    for (double& v : a.data) {
      switch (spec.activations[l]) {
        case Activation::kIdentity:
          break;
        case Activation::kRelu:
          v = v > 0.0 ? v : 0.0;
          break;
        case Activation::kTanh:
          v = std::tanh(v);
          break;
      }
    }
    if (spec.activations[l] == Activation::kRelu)
      for (double v : z.data)
        nf.min_relu_margin = std::min(nf.min_relu_margin, std::fabs(v));
    nf.acts.push_back(a);
  }
  return nf;
}

// Independent loss: stabilized log-softmax / squared error, per sample,
// averaged by hand.
inline double naive_loss(const MlpSpec& spec, const Matrix& logits,
                         const LabelVector& labels) {
  const std::size_t batch = logits.rows;
  double total = 0.0;
  if (spec.head == Head::kSoftmaxXent) {
    for (std::size_t i = 0; i < batch; ++i) {
      double mx = logits(i, 0);
      for (std::size_t j = 1; j < logits.cols; ++j)
        mx = std::max(mx, logits(i, j));
      double sum = 0.0;
      for (std::size_t j = 0; j < logits.cols; ++j)
        sum += std::exp(logits(i, j) - mx);
      total += mx + std::log(sum) -
               logits(i, static_cast<std::size_t>(labels[i]));
    }
  } else if (spec.head == Head::kMse) {
    for (std::size_t i = 0; i < batch; ++i)
      for (std::size_t j = 0; j < logits.cols; ++j) {
        const double target =
            logits.cols == 1
                ? static_cast<double>(labels[i])
                : (static_cast<std::size_t>(labels[i]) == j ? 1.0 : 0.0);
        const double diff = logits(i, j) - target;
        total += diff * diff;
      }
  } else {
    throw std::invalid_argument("naive_loss needs a head");
  }
  return total / static_cast<double>(batch);
}

struct RandomInstance {
  MlpSpec spec;
  ParamVector params;
  Matrix inputs;
  LabelVector labels;
};

// Draws architectures, parameters, inputs and labels. Instances whose
// relu pre-activations sit within `margin` of the kink are rejected, so
// finite differencing stays on one linear piece.
inline RandomInstance random_instance(fslsim::Rng& rng, double margin = 1e-3,
                                      bool allow_relu = true) {
  for (int attempt = 0; attempt < 1000; ++attempt) {
    RandomInstance inst;
    const std::size_t nlayers = 1 + rng.below(3);
    inst.spec.layer_dims.push_back(1 + rng.below(6));
    for (std::size_t l = 0; l < nlayers; ++l) {
      inst.spec.layer_dims.push_back(1 + rng.below(6));
      const std::uint64_t pick = rng.below(allow_relu ? 3 : 2);
      inst.spec.activations.push_back(
          pick == 0 ? Activation::kIdentity
                    : (pick == 1 ? Activation::kTanh : Activation::kRelu));
    }
    const bool multi_out = inst.spec.layer_dims.back() >= 2;
    inst.spec.head = (multi_out && rng.below(2) == 0) ? Head::kSoftmaxXent
                                                      : Head::kMse;

    inst.params = fslsim::zeros_like(inst.spec);
    for (double& v : inst.params.data) v = rng.uniform(-1.0, 1.0);

    const std::size_t batch = 1 + rng.below(5);
    inst.inputs.resize(batch, inst.spec.input_dim());
    for (double& v : inst.inputs.data) v = rng.normal();

    inst.labels.resize(batch);
    for (auto& y : inst.labels)
      y = static_cast<std::int64_t>(rng.below(inst.spec.output_dim()));

    const NaiveForward nf = naive_forward(inst.spec, inst.params, inst.inputs);
    if (nf.min_relu_margin < margin) continue;
    return inst;
  }
  throw std::runtime_error("could not draw an instance clear of relu kinks");
}

}  // namespace testutil
