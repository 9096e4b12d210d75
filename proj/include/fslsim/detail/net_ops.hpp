#pragma once

// Scalar-generic forward/backward kernels. The double instantiation is
// the production path; the Dual instantiation gives forward-over-reverse
// second derivatives for the auxiliary alignment loss. Loop order is
// fixed everywhere so summation order (and hence bit patterns) never
// depends on anything but the operands.

#include <cstddef>
#include <stdexcept>
#include <vector>

#include "fslsim/detail/dual.hpp"
#include "fslsim/matrix.hpp"
#include "fslsim/mlp.hpp"

namespace fslsim::detail {

template <typename T>
void affine_forward(const MatT<T>& x, const T* w, const T* b,
                    std::size_t din, std::size_t dout, MatT<T>& out) {
  out.resize(x.rows, dout);
  for (std::size_t i = 0; i < x.rows; ++i) {
    T* orow = &out.data[i * dout];
    for (std::size_t j = 0; j < dout; ++j) orow[j] = b[j];
    const T* xrow = &x.data[i * din];
    for (std::size_t k = 0; k < din; ++k) {
      const T& xik = xrow[k];
      const T* wrow = w + k * dout;
      for (std::size_t j = 0; j < dout; ++j) orow[j] += xik * wrow[j];
    }
  }
}

template <typename T>
void activation_forward(Activation act, MatT<T>& z) {
  switch (act) {
    case Activation::kIdentity:
      return;
    case Activation::kRelu:
      for (auto& v : z.data)
        if (!(value_of(v) > 0.0)) v = T{};
      return;
    case Activation::kTanh:
      for (auto& v : z.data) v = tanh(v);
      return;
  }
}

// d(loss)/d(pre-activation) from d(loss)/d(post-activation), using the
// post-activation values only. relu'(0) is taken as 0.
template <typename T>
void activation_backward(Activation act, const MatT<T>& a, MatT<T>& da) {
  switch (act) {
    case Activation::kIdentity:
      return;
    case Activation::kRelu:
      for (std::size_t i = 0; i < a.size(); ++i)
        if (!(value_of(a.data[i]) > 0.0)) da.data[i] = T{};
      return;
    case Activation::kTanh:
      for (std::size_t i = 0; i < a.size(); ++i) {
        const T& t = a.data[i];
        da.data[i] = da.data[i] * (T{1.0} - t * t);
      }
      return;
  }
}

// acts[0] = inputs, acts[l+1] = output of layer l.
template <typename T>
void forward_pass(const MlpSpec& spec, const T* params, const MatT<T>& inputs,
                  std::vector<MatT<T>>& acts) {
  const std::size_t nlayers = spec.layer_count();
  acts.resize(nlayers + 1);
  acts[0] = inputs;
  std::size_t off = 0;
  for (std::size_t l = 0; l < nlayers; ++l) {
    const std::size_t din = spec.layer_dims[l];
    const std::size_t dout = spec.layer_dims[l + 1];
    const T* w = params + off;
    off += din * dout;
    const T* b = params + off;
    off += dout;
    affine_forward(acts[l], w, b, din, dout, acts[l + 1]);
    activation_forward(spec.activations[l], acts[l + 1]);
  }
}

// Batch-mean loss at the head and its gradient w.r.t. the logits.
template <typename T>
T head_loss_and_grad(Head head, const MatT<T>& logits,
                     const LabelVector& labels, MatT<T>& dlogits) {
  const std::size_t batch = logits.rows;
  const std::size_t dim = logits.cols;
  dlogits.resize(batch, dim);
  T loss{};
  const T inv_batch = T{1.0 / static_cast<double>(batch)};
  if (head == Head::kSoftmaxXent) {
    for (std::size_t i = 0; i < batch; ++i) {
      const T* row = &logits.data[i * dim];
      std::size_t arg = 0;
      for (std::size_t j = 1; j < dim; ++j)
        if (value_of(row[j]) > value_of(row[arg])) arg = j;
      const T m = row[arg];
      T sum{};
      for (std::size_t j = 0; j < dim; ++j) sum += exp(row[j] - m);
      const T lse = m + log(sum);
      const auto y = static_cast<std::size_t>(labels[i]);
      loss += (lse - row[y]) * inv_batch;
      T* drow = &dlogits.data[i * dim];
      for (std::size_t j = 0; j < dim; ++j)
        drow[j] = exp(row[j] - m) / sum * inv_batch;
      drow[y] -= inv_batch;
    }
    return loss;
  }
  if (head == Head::kMse) {
    // dim == 1 regresses on the label value; otherwise the target is the
    // one-hot row, and loss sums squared residuals over the row.
    for (std::size_t i = 0; i < batch; ++i) {
      const T* row = &logits.data[i * dim];
      T* drow = &dlogits.data[i * dim];
      for (std::size_t j = 0; j < dim; ++j) {
        double target;
        if (dim == 1)
          target = static_cast<double>(labels[i]);
        else
          target = (static_cast<std::size_t>(labels[i]) == j) ? 1.0 : 0.0;
        T diff = row[j] - T{target};
        loss += diff * diff * inv_batch;
        drow[j] = T{2.0} * diff * inv_batch;
      }
    }
    return loss;
  }
  throw std::invalid_argument("loss requires a head (spec.head is none)");
}

// Reverse pass from a cotangent on the network output. Accumulates into
// gparams (caller zeroes it) and fills dinputs if non-null. `dout` is
// consumed as scratch.
template <typename T>
void backward_pass(const MlpSpec& spec, const T* params,
                   const std::vector<MatT<T>>& acts, MatT<T> dout,
                   T* gparams, MatT<T>* dinputs) {
  const std::size_t nlayers = spec.layer_count();
  std::vector<std::size_t> offsets(nlayers);
  std::size_t off = 0;
  for (std::size_t l = 0; l < nlayers; ++l) {
    offsets[l] = off;
    off += spec.layer_dims[l] * spec.layer_dims[l + 1] + spec.layer_dims[l + 1];
  }
  MatT<T> dprev;
  for (std::size_t l = nlayers; l-- > 0;) {
    const std::size_t din = spec.layer_dims[l];
    const std::size_t dout_dim = spec.layer_dims[l + 1];
    const std::size_t batch = dout.rows;
    activation_backward(spec.activations[l], acts[l + 1], dout);
    const T* w = params + offsets[l];
    T* gw = gparams + offsets[l];
    T* gb = gw + din * dout_dim;
    const MatT<T>& x = acts[l];
    // dW[k][j] = sum_i x[i][k] * dz[i][j]
    for (std::size_t k = 0; k < din; ++k) {
      T* gwrow = gw + k * dout_dim;
      for (std::size_t i = 0; i < batch; ++i) {
        const T& xik = x.data[i * din + k];
        const T* drow = &dout.data[i * dout_dim];
        for (std::size_t j = 0; j < dout_dim; ++j) gwrow[j] += xik * drow[j];
      }
    }
    for (std::size_t i = 0; i < batch; ++i) {
      const T* drow = &dout.data[i * dout_dim];
      for (std::size_t j = 0; j < dout_dim; ++j) gb[j] += drow[j];
    }
    const bool need_dx = l > 0 || dinputs != nullptr;
    if (!need_dx) break;
    dprev.resize(batch, din);
    for (std::size_t i = 0; i < batch; ++i) {
      const T* drow = &dout.data[i * dout_dim];
      T* prow = &dprev.data[i * din];
      for (std::size_t k = 0; k < din; ++k) {
        const T* wrow = w + k * dout_dim;
        T acc{};
        for (std::size_t j = 0; j < dout_dim; ++j) acc += drow[j] * wrow[j];
        prow[k] = acc;
      }
    }
    std::swap(dout, dprev);
  }
  if (dinputs != nullptr) *dinputs = dout;
}

// Loss + full gradient in one call, generic over the scalar.
template <typename T>
T loss_and_grad_impl(const MlpSpec& spec, const T* params,
                     const MatT<T>& inputs, const LabelVector& labels,
                     std::vector<T>& gparams, MatT<T>& dinputs) {
  std::vector<MatT<T>> acts;
  forward_pass(spec, params, inputs, acts);
  MatT<T> dlogits;
  T loss = head_loss_and_grad(spec.head, acts.back(), labels, dlogits);
  gparams.assign(spec.param_count(), T{});
  backward_pass(spec, params, acts, std::move(dlogits), gparams.data(),
                &dinputs);
  return loss;
}

// Loss only (no gradients); used by evaluation loops.
template <typename T>
T loss_value(const MlpSpec& spec, const T* params, const MatT<T>& inputs,
             const LabelVector& labels) {
  std::vector<MatT<T>> acts;
  forward_pass(spec, params, inputs, acts);
  MatT<T> dlogits;
  return head_loss_and_grad(spec.head, acts.back(), labels, dlogits);
}

}  // namespace fslsim::detail
