#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "fslsim/matrix.hpp"

namespace fslsim {

enum class Activation { kIdentity, kRelu, kTanh };
enum class Head { kNone, kSoftmaxXent, kMse };

using LabelVector = std::vector<std::int64_t>;

struct MatShape {
  std::size_t rows = 0;
  std::size_t cols = 0;
  bool operator==(const MatShape&) const = default;
};

// Architecture of a fully connected network: layer l maps layer_dims[l]
// to layer_dims[l+1] and applies activations[l]. The head turns the last
// layer's output into a training loss; kNone marks a sub-network whose
// output feeds another network.
struct MlpSpec {
  std::vector<std::size_t> layer_dims;
  std::vector<Activation> activations;
  Head head = Head::kNone;

  bool operator==(const MlpSpec&) const = default;

  std::size_t layer_count() const { return activations.size(); }
  std::size_t input_dim() const { return layer_dims.front(); }
  std::size_t output_dim() const { return layer_dims.back(); }
  std::size_t param_count() const;
  // Shapes of the flattened parameter blocks: W0, b0, W1, b1, ...
  std::vector<MatShape> manifest() const;
  // Throws std::invalid_argument naming the violated constraint.
  void validate() const;
};

// Flat parameter buffer plus the shape manifest that interprets it.
struct ParamVector {
  std::vector<double> data;
  std::vector<MatShape> manifest;

  bool operator==(const ParamVector&) const = default;
  std::size_t size() const { return data.size(); }
};

ParamVector zeros_like(const MlpSpec& spec);

// Exact (bit-preserving) conversions between the flat buffer and the
// per-block matrix view.
std::vector<Matrix> unflatten(const ParamVector& params);
ParamVector flatten(const std::vector<Matrix>& blocks);

struct ForwardResult {
  // activations[0] is the input batch; activations[l+1] the output of
  // layer l after its activation. Back is the network output.
  std::vector<Matrix> activations;
  const Matrix& output() const { return activations.back(); }
};

ForwardResult forward(const MlpSpec& spec, const ParamVector& params,
                      const Matrix& inputs);

struct LossGrad {
  double loss = 0.0;
  ParamVector grad_params;
  Matrix grad_inputs;
};

// Batch-mean loss under spec.head plus exact gradients for every
// parameter and every input entry.
LossGrad loss_and_grad(const MlpSpec& spec, const ParamVector& params,
                       const Matrix& inputs, const LabelVector& labels);

// Pulls a cotangent on the network output back to parameter space
// (J^T u). Requires head == kNone; this is the client-side update
// primitive, where the cotangent arrives from elsewhere.
ParamVector vjp_params(const MlpSpec& spec, const ParamVector& params,
                       const Matrix& inputs, const Matrix& cotangent);

// Central-difference gradient of an arbitrary scalar function of the
// parameters; one +h/-h evaluation pair per coordinate.
ParamVector fd_grad(const std::function<double(const ParamVector&)>& f,
                    const ParamVector& params, double step);

ParamVector sgd_step(const ParamVector& params, const ParamVector& grad,
                     double lr);

std::string to_string(Activation a);
std::string to_string(Head h);

}  // namespace fslsim
