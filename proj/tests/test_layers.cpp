#include <doctest.h>

#include <cmath>
#include <vector>

#include "galds/adam.hpp"
#include "galds/error.hpp"
#include "galds/integrators.hpp"
#include "galds/nn_layers.hpp"

#include "support.hpp"

using namespace galds;
using galds::testing::gradcheck;
using galds::testing::random_values;

TEST_SUITE_BEGIN("layers");

TEST_CASE("normalized adjacency of a 2-path is [[.5,.5],[.5,.5]]") {
  const std::vector<double> a = dense_normalized_adjacency(2, {{0, 1}});
  for (double v : a) CHECK(v == doctest::Approx(0.5));

  const CsrMatrix c = csr_normalized_adjacency(2, {{0, 1}});
  CHECK(c.n == 2);
  REQUIRE(c.vals.size() == 4);
  for (double v : c.vals) CHECK(v == doctest::Approx(0.5));
}

TEST_CASE("normalized adjacency rejects malformed edge lists") {
  CHECK_THROWS_AS(dense_normalized_adjacency(2, {{0, 0}}), Error);          // self loop
  CHECK_THROWS_AS(dense_normalized_adjacency(2, {{0, 1}, {1, 0}}), Error);  // duplicate
  CHECK_THROWS_AS(dense_normalized_adjacency(2, {{0, 2}}), Error);          // out of range
}

TEST_CASE("normalized adjacency rows of a 3-path") {
  // Node 1 has degree 3 after self loops, the ends degree 2:
  // a01 = 1/sqrt(2*3), a11 = 1/3, a00 = 1/2.
  const std::vector<double> a = dense_normalized_adjacency(3, {{0, 1}, {1, 2}});
  CHECK(a[0] == doctest::Approx(0.5));
  CHECK(a[1] == doctest::Approx(1.0 / std::sqrt(6.0)));
  CHECK(a[2] == 0.0);
  CHECK(a[4] == doctest::Approx(1.0 / 3.0));
}

TEST_CASE("glorot bounds and determinism") {
  Rng r1(42), r2(42);
  Tensor w1 = glorot_uniform(8, 4, r1);
  Tensor w2 = glorot_uniform(8, 4, r2);
  const double bound = std::sqrt(6.0 / (8 + 4));
  for (int64_t i = 0; i < w1.size(); ++i) {
    CHECK(std::abs(w1.at(i)) <= bound);
    CHECK(w1.at(i) == w2.at(i));
  }
}

TEST_CASE("activation names round-trip and reject unknowns") {
  for (Activation a : {Activation::linear, Activation::relu, Activation::softplus,
                       Activation::sigmoid})
    CHECK(activation_from_name(activation_name(a)) == a);
  CHECK_THROWS_AS(activation_from_name("tanh"), Error);
}

TEST_CASE("gconv and dense layers pass gradient checks in every mode") {
  const std::vector<double> adj = dense_normalized_adjacency(4, {{0, 1}, {1, 2}, {2, 3}});
  const std::vector<double> adj2 = dense_normalized_adjacency(4, {{0, 3}, {1, 2}});
  const CsrMatrix csr = csr_normalized_adjacency(4, {{0, 1}, {1, 2}, {2, 3}, {0, 2}});
  const std::vector<const std::vector<double>*> mats{&adj, &adj2};

  for (uint64_t seed = 1; seed <= 5; ++seed) {
    Rng rng(seed * 11);
    for (Activation act : {Activation::linear, Activation::relu, Activation::softplus,
                           Activation::sigmoid}) {
      GconvLayer gc(3, 2, act, rng);
      gc.w.set_requires_grad(true);
      gc.b.set_requires_grad(true);
      Tensor x = Tensor::from({8, 3}, random_values(rng, 24), true);
      Tensor tgt = Tensor::from({8, 2}, random_values(rng, 16));

      INFO("gconv dense, act " << activation_name(act) << ", seed " << seed);
      CHECK(gradcheck({&gc.w, &gc.b, &x}, [&](Tape& t) {
              return t.sse(gc.forward_dense(t, t.leaf(x), adj, 4), t.leaf(tgt));
            }) < 1e-4);
      INFO("gconv multi, act " << activation_name(act) << ", seed " << seed);
      CHECK(gradcheck({&gc.w, &gc.b, &x}, [&](Tape& t) {
              return t.sse(gc.forward_multi(t, t.leaf(x), mats, 4), t.leaf(tgt));
            }) < 1e-4);

      Tensor xs = Tensor::from({4, 3}, random_values(rng, 12), true);
      Tensor tgts = Tensor::from({4, 2}, random_values(rng, 8));
      INFO("gconv sparse, act " << activation_name(act) << ", seed " << seed);
      CHECK(gradcheck({&gc.w, &gc.b, &xs}, [&](Tape& t) {
              return t.sse(gc.forward_sparse(t, t.leaf(xs), csr), t.leaf(tgts));
            }) < 1e-4);

      DenseLayer dl(3, 2, act, rng);
      dl.w.set_requires_grad(true);
      dl.b.set_requires_grad(true);
      INFO("dense layer, act " << activation_name(act) << ", seed " << seed);
      CHECK(gradcheck({&dl.w, &dl.b, &x}, [&](Tape& t) {
              return t.sse(dl.forward(t, t.leaf(x)), t.leaf(tgt));
            }) < 1e-4);
    }
  }
}

TEST_CASE("gconv propagates along graph edges only") {
  // Two disconnected pairs: features of one pair must not leak into the other.
  const std::vector<double> adj = dense_normalized_adjacency(4, {{0, 1}, {2, 3}});
  Rng rng(3);
  GconvLayer gc(1, 1, Activation::linear, rng);
  gc.b.values()[0] = 0.0;
  Tensor x0 = Tensor::from({4, 1}, {1, 2, 5, 7});
  Tensor x1 = Tensor::from({4, 1}, {1, 2, -9, 4});
  Tape tape;
  std::span<const double> y0 = tape.value(gc.forward_dense(tape, tape.leaf(x0), adj, 4));
  std::span<const double> y1 = tape.value(gc.forward_dense(tape, tape.leaf(x1), adj, 4));
  CHECK(y0[0] == doctest::Approx(y1[0]));
  CHECK(y0[1] == doctest::Approx(y1[1]));
  CHECK(y0[2] != doctest::Approx(y1[2]));
}

TEST_CASE("adam first step follows the bias-corrected update") {
  Tensor p = Tensor::from({1, 2}, {1.0, -2.0}, true);
  Adam opt({&p}, {.lr = 1e-3});
  p.grad()[0] = 0.5;
  p.grad()[1] = -4.0;
  opt.step();
  // First step: m_hat = g, v_hat = g^2, so the move is lr * g / (|g| + eps).
  CHECK(p.at(0) == doctest::Approx(1.0 - 1e-3 * 0.5 / (0.5 + 1e-8)).epsilon(1e-12));
  CHECK(p.at(1) == doctest::Approx(-2.0 + 1e-3 * 4.0 / (4.0 + 1e-8)).epsilon(1e-12));
  CHECK(opt.steps() == 1);
}

TEST_CASE("adam with zero gradient leaves parameters unchanged") {
  Tensor p = Tensor::from({1, 2}, {1.0, -2.0}, true);
  Adam opt({&p});
  opt.step();
  CHECK(p.at(0) == 1.0);
  CHECK(p.at(1) == -2.0);
}

TEST_CASE("adam second step matches a scalar hand computation") {
  const double lr = 0.1, b1 = 0.9, b2 = 0.999, eps = 1e-8;
  Tensor p = Tensor::from({1, 1}, {0.0}, true);
  Adam opt({&p}, {.lr = lr, .beta1 = b1, .beta2 = b2, .eps = eps});
  double m = 0, v = 0, x = 0;
  const double grads[2] = {0.3, -0.7};
  for (int t = 1; t <= 2; ++t) {
    const double g = grads[t - 1];
    p.zero_grad();
    p.grad()[0] = g;
    opt.step();
    m = b1 * m + (1 - b1) * g;
    v = b2 * v + (1 - b2) * g * g;
    const double mh = m / (1 - std::pow(b1, t));
    const double vh = v / (1 - std::pow(b2, t));
    x -= lr * mh / (std::sqrt(vh) + eps);
    CHECK(p.at(0) == doctest::Approx(x).epsilon(1e-14));
  }
}

TEST_CASE("adam rejects parameters without gradients and non-finite grads") {
  Tensor fixed = Tensor::from({1, 1}, {1.0});
  CHECK_THROWS_AS(Adam({&fixed}), Error);

  Tensor p = Tensor::from({1, 1}, {1.0}, true);
  Adam opt({&p});
  p.grad()[0] = std::numeric_limits<double>::quiet_NaN();
  CHECK_THROWS_AS(opt.step(), Error);
}

TEST_CASE("param registry collects names, counts, and zeroes grads") {
  Rng rng(5);
  GconvLayer gc(3, 4, Activation::relu, rng);
  DenseLayer dl(4, 2, Activation::linear, rng);
  ParamRegistry reg;
  reg.add_layer("m.g0", gc);
  reg.add_layer("m.head", dl);
  CHECK(reg.items().size() == 4);
  CHECK(reg.items()[0].first == "m.g0.W");
  CHECK(reg.items()[1].first == "m.g0.b");
  CHECK(reg.parameter_count() == 3 * 4 + 4 + 4 * 2 + 2);

  for (Tensor* t : reg.tensors()) t->set_requires_grad(true);
  gc.w.grad()[0] = 7.0;
  reg.zero_grad();
  CHECK(gc.w.grad()[0] == 0.0);
}

TEST_CASE("integrator names round-trip") {
  for (Integrator s : {Integrator::rk4, Integrator::euler, Integrator::midpoint})
    CHECK(integrator_from_name(integrator_name(s)) == s);
  CHECK_THROWS_AS(integrator_from_name("rk45"), Error);
}

namespace {

// Error at t = 0.1 integrating dy/dt = -y from y(0) = 1 with n equal steps.
double decay_error(Integrator scheme, int n) {
  const RhsFn rhs = [](double, const std::vector<double>& y, std::vector<double>& dy) {
    dy.assign(y.size(), 0.0);
    for (size_t i = 0; i < y.size(); ++i) dy[i] = -y[i];
  };
  std::vector<double> y{1.0};
  const double dt = 0.1 / n;
  for (int i = 0; i < n; ++i) y = explicit_step(scheme, rhs, i * dt, dt, y);
  return std::abs(y[0] - std::exp(-0.1));
}

}  // namespace

TEST_CASE("rk4 error on exponential decay shrinks 16x per dt halving") {
  const double e1 = decay_error(Integrator::rk4, 1);   // dt = 0.1
  const double e2 = decay_error(Integrator::rk4, 2);   // dt = 0.05
  const double e4 = decay_error(Integrator::rk4, 4);   // dt = 0.025
  CHECK(e1 / e2 > 14.0);
  CHECK(e1 / e2 < 18.0);
  CHECK(e2 / e4 > 14.0);
  CHECK(e2 / e4 < 18.0);
}

TEST_CASE("euler and midpoint converge at their advertised orders") {
  CHECK(decay_error(Integrator::euler, 1) / decay_error(Integrator::euler, 2) ==
        doctest::Approx(2.0).epsilon(0.2));
  CHECK(decay_error(Integrator::midpoint, 1) / decay_error(Integrator::midpoint, 2) ==
        doctest::Approx(4.0).epsilon(0.2));
}

TEST_CASE("rk4 step matches the analytic exponential closely") {
  const RhsFn rhs = [](double, const std::vector<double>& y, std::vector<double>& dy) {
    dy.assign(y.size(), 0.0);
    for (size_t i = 0; i < y.size(); ++i) dy[i] = -y[i];
  };
  std::vector<double> y{2.0, -1.0};
  for (int i = 0; i < 100; ++i) y = rk4_step(rhs, i * 0.01, 0.01, y);
  CHECK(y[0] == doctest::Approx(2.0 * std::exp(-1.0)).epsilon(1e-9));
  CHECK(y[1] == doctest::Approx(-std::exp(-1.0)).epsilon(1e-9));
}

TEST_SUITE_END();
