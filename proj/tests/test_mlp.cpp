#include <cstring>

#include "doctest.h"
#include "fslsim/mlp.hpp"
#include "fslsim/rng.hpp"
#include "helpers.hpp"

using namespace fslsim;
using testutil::naive_forward;
using testutil::naive_loss;
using testutil::random_instance;
using testutil::rel_err;

namespace {

// flat view of a matrix for fd_grad
ParamVector as_params(const Matrix& m) {
  ParamVector p;
  p.data = m.data;
  p.manifest = {{m.rows, m.cols}};
  return p;
}

Matrix as_matrix(const ParamVector& p, std::size_t rows, std::size_t cols) {
  Matrix m(rows, cols);
  m.data = p.data;
  return m;
}

}  // namespace

TEST_CASE("forward: single identity layer passes input through") {
  MlpSpec spec;
  spec.layer_dims = {1, 1};
  spec.activations = {Activation::kIdentity};
  ParamVector p = zeros_like(spec);
  p.data[0] = 1.0;  // W
  Matrix x(1, 1);
  x(0, 0) = 2.0;
  CHECK(forward(spec, p, x).output()(0, 0) == 2.0);
}

TEST_CASE("forward matches the naive per-element reimplementation") {
  Rng rng(2024);
  for (int i = 0; i < 50; ++i) {
    const auto inst = random_instance(rng);
    const ForwardResult fast = forward(inst.spec, inst.params, inst.inputs);
    const auto slow = naive_forward(inst.spec, inst.params, inst.inputs);
    REQUIRE(fast.output().rows == slow.output().rows);
    REQUIRE(fast.output().cols == slow.output().cols);
    CHECK(rel_err(fast.output().data, slow.output().data) <= 1e-12);
    // the whole activation stack, not just the output
    for (std::size_t l = 0; l < fast.activations.size(); ++l)
      CHECK(rel_err(fast.activations[l].data, slow.acts[l].data) <= 1e-12);
  }
}

TEST_CASE("loss: zero logits over 10 classes give ln 10") {
  MlpSpec spec;
  spec.layer_dims = {4, 10};
  spec.activations = {Activation::kIdentity};
  spec.head = Head::kSoftmaxXent;
  const ParamVector p = zeros_like(spec);
  Matrix x(3, 4);
  Rng rng(7);
  for (double& v : x.data) v = rng.normal();
  const LossGrad lg = loss_and_grad(spec, p, x, {0, 5, 9});
  CHECK(lg.loss == doctest::Approx(2.302585092994046).epsilon(1e-12));
}

TEST_CASE("loss: squared-error closed form") {
  // z = W x = 2, target 0: loss (z-t)^2 = 4, dz = 2z = 4, dW = x dz = 8,
  // db = 4, dx = W dz = 4
  MlpSpec spec;
  spec.layer_dims = {1, 1};
  spec.activations = {Activation::kIdentity};
  spec.head = Head::kMse;
  ParamVector p = zeros_like(spec);
  p.data[0] = 1.0;
  Matrix x(1, 1);
  x(0, 0) = 2.0;
  const LossGrad lg = loss_and_grad(spec, p, x, {0});
  CHECK(lg.loss == 4.0);
  CHECK(lg.grad_params.data[0] == 8.0);  // dW
  CHECK(lg.grad_params.data[1] == 4.0);  // db
  CHECK(lg.grad_inputs(0, 0) == 4.0);
}

TEST_CASE("loss matches the naive head computation") {
  Rng rng(551);
  for (int i = 0; i < 40; ++i) {
    const auto inst = random_instance(rng);
    const LossGrad lg =
        loss_and_grad(inst.spec, inst.params, inst.inputs, inst.labels);
    const auto nf = naive_forward(inst.spec, inst.params, inst.inputs);
    const double want = naive_loss(inst.spec, nf.output(), inst.labels);
    CHECK(lg.loss == doctest::Approx(want).epsilon(1e-12));
  }
}

TEST_CASE("loss_and_grad agrees with central differences") {
  Rng rng(90210);
  int done = 0;
  while (done < 30) {
    const auto inst = random_instance(rng);
    const LossGrad lg =
        loss_and_grad(inst.spec, inst.params, inst.inputs, inst.labels);
    if (testutil::norm(lg.grad_params.data) < 1e-3) continue;  // too flat
    ++done;

    const ParamVector fd_p = fd_grad(
        [&](const ParamVector& p) {
          return loss_and_grad(inst.spec, p, inst.inputs, inst.labels).loss;
        },
        inst.params, 1e-5);
    CHECK(rel_err(lg.grad_params.data, fd_p.data) <= 1e-6);

    const ParamVector fd_x = fd_grad(
        [&](const ParamVector& xp) {
          const Matrix xm =
              as_matrix(xp, inst.inputs.rows, inst.inputs.cols);
          return loss_and_grad(inst.spec, inst.params, xm, inst.labels).loss;
        },
        as_params(inst.inputs), 1e-5);
    CHECK(rel_err(lg.grad_inputs.data, fd_x.data) <= 1e-6);
  }
}

TEST_CASE("vjp_params: zero cotangent gives zero gradient") {
  Rng rng(11);
  auto inst = random_instance(rng);
  inst.spec.head = Head::kNone;
  const ForwardResult fwd = forward(inst.spec, inst.params, inst.inputs);
  const Matrix zero(fwd.output().rows, fwd.output().cols);
  const ParamVector g =
      vjp_params(inst.spec, inst.params, inst.inputs, zero);
  for (double v : g.data) CHECK(v == 0.0);
}

TEST_CASE("vjp_params agrees with central differences of <u, f(x)>") {
  Rng rng(83);
  for (int i = 0; i < 20; ++i) {
    auto inst = random_instance(rng);
    inst.spec.head = Head::kNone;
    const ForwardResult fwd = forward(inst.spec, inst.params, inst.inputs);
    Matrix u(fwd.output().rows, fwd.output().cols);
    for (double& v : u.data) v = rng.uniform(-1.0, 1.0);

    const ParamVector g = vjp_params(inst.spec, inst.params, inst.inputs, u);
    const ParamVector fd = fd_grad(
        [&](const ParamVector& p) {
          const ForwardResult f2 = forward(inst.spec, p, inst.inputs);
          double dot = 0.0;
          for (std::size_t k = 0; k < u.data.size(); ++k)
            dot += u.data[k] * f2.output().data[k];
          return dot;
        },
        inst.params, 1e-5);
    if (testutil::norm(g.data) < 1e-3) continue;
    CHECK(rel_err(g.data, fd.data) <= 1e-6);
  }
}

TEST_CASE("fd_grad: quadratic is differentiated to roundoff") {
  ParamVector p;
  p.data = {1.0, 2.0};
  p.manifest = {{1, 2}};
  const ParamVector g = fd_grad(
      [](const ParamVector& q) {
        return 0.5 * (q.data[0] * q.data[0] + q.data[1] * q.data[1]);
      },
      p, 1e-5);
  CHECK(g.data[0] == doctest::Approx(1.0).epsilon(1e-8));
  CHECK(g.data[1] == doctest::Approx(2.0).epsilon(1e-8));
}

TEST_CASE("fd_grad: constant function has zero gradient") {
  ParamVector p;
  p.data = {3.0, -1.0, 0.5};
  p.manifest = {{1, 3}};
  const ParamVector g =
      fd_grad([](const ParamVector&) { return 42.0; }, p, 1e-5);
  for (double v : g.data) CHECK(v == 0.0);
}

TEST_CASE("sgd_step arithmetic") {
  ParamVector p, g;
  p.data = {1.0, 1.0};
  p.manifest = {{1, 2}};
  g.data = {2.0, -2.0};
  g.manifest = {{1, 2}};
  const ParamVector out = sgd_step(p, g, 0.5);
  CHECK(out.data[0] == 0.0);
  CHECK(out.data[1] == 2.0);

  SUBCASE("zero learning rate is the identity") {
    const ParamVector same = sgd_step(p, g, 0.0);
    CHECK(same.data == p.data);
  }

  SUBCASE("repeated proportional steps follow the geometric recursion") {
    ParamVector q;
    q.data = {1.0};
    q.manifest = {{1, 1}};
    for (int i = 0; i < 10; ++i) {
      ParamVector grad = q;
      q = sgd_step(q, grad, 0.1);
    }
    CHECK(q.data[0] == doctest::Approx(0.3486784401).epsilon(1e-9));
  }
}

TEST_CASE("flatten/unflatten round-trips exactly") {
  Rng rng(4242);
  for (int i = 0; i < 20; ++i) {
    const auto inst = random_instance(rng);
    const std::vector<Matrix> blocks = unflatten(inst.params);
    const ParamVector back = flatten(blocks);
    CHECK(back.data == inst.params.data);
    CHECK(back.manifest == inst.params.manifest);
  }
}

TEST_CASE("repeat evaluations are bitwise identical") {
  Rng rng(321);
  const auto inst = random_instance(rng);
  const LossGrad a =
      loss_and_grad(inst.spec, inst.params, inst.inputs, inst.labels);
  const LossGrad b =
      loss_and_grad(inst.spec, inst.params, inst.inputs, inst.labels);
  CHECK(std::memcmp(&a.loss, &b.loss, sizeof(double)) == 0);
  CHECK(std::memcmp(a.grad_params.data.data(), b.grad_params.data.data(),
                    a.grad_params.data.size() * sizeof(double)) == 0);
  CHECK(std::memcmp(a.grad_inputs.data.data(), b.grad_inputs.data.data(),
                    a.grad_inputs.data.size() * sizeof(double)) == 0);
}

TEST_CASE("argument validation") {
  MlpSpec spec;
  spec.layer_dims = {2, 3};
  spec.activations = {Activation::kIdentity};
  spec.head = Head::kSoftmaxXent;
  const ParamVector p = zeros_like(spec);
  Matrix x(2, 2);

  SUBCASE("wrong input width") {
    Matrix bad(2, 3);
    CHECK_THROWS_AS(forward(spec, p, bad), std::invalid_argument);
  }
  SUBCASE("empty batch") {
    Matrix empty(0, 2);
    CHECK_THROWS_AS(forward(spec, p, empty), std::invalid_argument);
  }
  SUBCASE("headless loss") {
    MlpSpec none = spec;
    none.head = Head::kNone;
    CHECK_THROWS_AS(loss_and_grad(none, p, x, {0, 1}), std::invalid_argument);
  }
  SUBCASE("label out of range") {
    CHECK_THROWS_AS(loss_and_grad(spec, p, x, {0, 3}), std::invalid_argument);
  }
  SUBCASE("label count mismatch") {
    CHECK_THROWS_AS(loss_and_grad(spec, p, x, {0}), std::invalid_argument);
  }
  SUBCASE("vjp wants a headless spec") {
    Matrix u(2, 3);
    CHECK_THROWS_AS(vjp_params(spec, p, x, u), std::invalid_argument);
  }
  SUBCASE("vjp cotangent shape") {
    MlpSpec none = spec;
    none.head = Head::kNone;
    Matrix u(2, 2);
    CHECK_THROWS_AS(vjp_params(none, p, x, u), std::invalid_argument);
  }
  SUBCASE("non-finite input") {
    x(0, 0) = std::numeric_limits<double>::quiet_NaN();
    CHECK_THROWS_AS(forward(spec, p, x), std::invalid_argument);
  }
  SUBCASE("param size mismatch") {
    ParamVector small;
    small.data = {1.0};
    small.manifest = {{1, 1}};
    CHECK_THROWS_AS(forward(spec, small, x), std::invalid_argument);
  }
  SUBCASE("negative learning rate") {
    CHECK_THROWS_AS(sgd_step(p, p, -0.1), std::invalid_argument);
  }
  SUBCASE("mismatched sgd shapes") {
    ParamVector other;
    other.data = {1.0};
    other.manifest = {{1, 1}};
    CHECK_THROWS_AS(sgd_step(p, other, 0.1), std::invalid_argument);
  }
}
