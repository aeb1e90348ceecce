#include <doctest.h>

#include <cmath>
#include <vector>

#include "galds/error.hpp"
#include "galds/nn_layers.hpp"
#include "galds/tape.hpp"
#include "galds/tensor.hpp"

#include "support.hpp"

using namespace galds;
using galds::testing::gradcheck;
using galds::testing::random_values;

TEST_SUITE_BEGIN("tape");

TEST_CASE("matmul forward matches a hand computation") {
  Tape tape;
  Tensor a = Tensor::from({2, 3}, {1, 2, 3, 4, 5, 6});
  Tensor b = Tensor::from({3, 2}, {7, 8, 9, 10, 11, 12});
  Tape::Var y = tape.matmul(tape.leaf(a), tape.leaf(b));
  // row 0: 1*7+2*9+3*11 = 58, 1*8+2*10+3*12 = 64
  const std::vector<double> want{58, 64, 139, 154};
  std::span<const double> got = tape.value(y);
  for (size_t i = 0; i < want.size(); ++i) CHECK(got[i] == doctest::Approx(want[i]));
}

TEST_CASE("elementwise forward values") {
  Tape tape;
  Tensor x = Tensor::from({1, 4}, {-1.0, 0.0, 0.5, 2.0});
  Tape::Var v = tape.leaf(x);

  std::span<const double> r = tape.value(tape.relu(v));
  CHECK(r[0] == 0.0);
  CHECK(r[1] == 0.0);
  CHECK(r[3] == 2.0);

  std::span<const double> s = tape.value(tape.softplus(v));
  CHECK(s[1] == doctest::Approx(std::log(2.0)));
  CHECK(s[3] == doctest::Approx(std::log1p(std::exp(2.0))));

  std::span<const double> g = tape.value(tape.sigmoid(v));
  CHECK(g[1] == doctest::Approx(0.5));
  CHECK(g[3] == doctest::Approx(1.0 / (1.0 + std::exp(-2.0))));
}

TEST_CASE("arithmetic ops forward values") {
  Tape tape;
  Tensor a = Tensor::from({2, 2}, {1, 2, 3, 4});
  Tensor b = Tensor::from({2, 2}, {10, 20, 30, 40});
  Tape::Var va = tape.leaf(a), vb = tape.leaf(b);

  CHECK(tape.value(tape.add(va, vb))[3] == 44.0);
  CHECK(tape.value(tape.sub(va, vb))[0] == -9.0);
  CHECK(tape.value(tape.mul(va, vb))[2] == 90.0);
  CHECK(tape.value(tape.add_scaled(va, vb, 0.5))[1] == 12.0);
  CHECK(tape.value(tape.scale(va, -2.0))[3] == -8.0);

  Tensor bias = Tensor::from({1, 2}, {100, 200});
  std::span<const double> rb = tape.value(tape.add_rowvec(va, tape.leaf(bias)));
  CHECK(rb[0] == 101.0);
  CHECK(rb[3] == 204.0);
}

TEST_CASE("block, pooling and gather ops forward values") {
  Tape tape;
  Tensor x = Tensor::from({4, 2}, {1, 2, 3, 4, 5, 6, 7, 8});
  Tape::Var v = tape.leaf(x);

  // Row swap within each block of 2.
  const std::vector<double> swap{0, 1, 1, 0};
  std::span<const double> d = tape.value(tape.dense_block_mix(v, swap, 2));
  CHECK(d[0] == 3.0);
  CHECK(d[2] == 1.0);
  CHECK(d[4] == 7.0);

  const std::vector<double> id{1, 0, 0, 1};
  const std::vector<const std::vector<double>*> mats{&swap, &id};
  std::span<const double> dm = tape.value(tape.dense_block_mix_multi(v, mats, 2));
  CHECK(dm[0] == 3.0);  // first block swapped
  CHECK(dm[4] == 5.0);  // second block untouched

  std::span<const double> m = tape.value(tape.mean_rows_blocks(v, 2));
  CHECK(m[0] == 2.0);  // mean(1, 3)
  CHECK(m[3] == 7.0);  // mean(6, 8)

  Tensor z = Tensor::from({2, 2}, {1, 2, 3, 4});
  std::span<const double> rep = tape.value(tape.repeat_rows_blocks(tape.leaf(z), 3));
  CHECK(rep.size() == 12);
  CHECK(rep[0] == 1.0);
  CHECK(rep[4] == 2.0);
  CHECK(rep[10] == 3.0);

  std::span<const double> gat = tape.value(tape.row_gather(v, {3, 0}));
  CHECK(gat[0] == 7.0);
  CHECK(gat[3] == 2.0);

  Tape::Var c = tape.concat_cols(std::vector<Tape::Var>{v, v});
  CHECK(tape.value(c).size() == 16);
  CHECK(tape.value(c)[4 + 2] == 3.0);  // second copy of row 1

  Tape::Var rr = tape.concat_rows(std::vector<Tape::Var>{v, tape.leaf(z)});
  CHECK(tape.value(rr).size() == 12);
  CHECK(tape.value(rr)[8] == 1.0);
}

TEST_CASE("sparse block mix equals the dense result") {
  CsrMatrix a = csr_normalized_adjacency(3, {{0, 1}, {1, 2}});
  const std::vector<double> ad = dense_normalized_adjacency(3, {{0, 1}, {1, 2}});
  Rng rng(7);
  Tensor x = Tensor::from({6, 2}, random_values(rng, 12));
  Tape tape;
  Tape::Var v = tape.leaf(x);
  std::span<const double> ys = tape.value(tape.sparse_block_mix(v, a));
  std::span<const double> yd = tape.value(tape.dense_block_mix(v, ad, 3));
  for (size_t i = 0; i < ys.size(); ++i) CHECK(ys[i] == doctest::Approx(yd[i]).epsilon(1e-12));
}

TEST_CASE("sum and sse reduce to hand values") {
  Tape tape;
  Tensor a = Tensor::from({1, 2}, {1, 2});
  Tensor b = Tensor::from({1, 2}, {0, 4});
  CHECK(tape.scalar(tape.sum(tape.leaf(a))) == 3.0);
  CHECK(tape.scalar(tape.sse(tape.leaf(a), tape.leaf(b))) == 5.0);
}

TEST_CASE("backward of sum(x*x) is 2x") {
  Tensor x = Tensor::from({2, 2}, {1, -2, 3, 0.5}, true);
  Tape tape;
  Tape::Var v = tape.leaf(x);
  tape.backward(tape.sum(tape.mul(v, v)));
  for (int64_t i = 0; i < 4; ++i) CHECK(x.grad()[static_cast<size_t>(i)] ==
                                        doctest::Approx(2.0 * x.at(i)));
}

TEST_CASE("gradients accumulate across reuses of a leaf") {
  Tensor x = Tensor::from({1, 1}, {3.0}, true);
  Tape tape;
  Tape::Var v = tape.leaf(x);
  // f = x^2 + 2x -> f' = 2x + 2
  Tape::Var loss = tape.add(tape.mul(v, v), tape.scale(v, 2.0));
  tape.backward(tape.sum(loss));
  CHECK(x.grad()[0] == doctest::Approx(8.0));
}

TEST_CASE("every op passes a finite-difference gradient check") {
  CsrMatrix csr = csr_normalized_adjacency(3, {{0, 1}, {1, 2}, {0, 2}});
  const std::vector<double> dense = dense_normalized_adjacency(3, {{0, 1}, {1, 2}});
  const std::vector<double> dense2 = dense_normalized_adjacency(3, {{0, 2}, {1, 2}});
  const std::vector<const std::vector<double>*> mats{&dense, &dense2};

  for (uint64_t seed = 1; seed <= 5; ++seed) {
    Rng rng(seed);
    Tensor a = Tensor::from({6, 3}, random_values(rng, 18), true);
    Tensor b = Tensor::from({6, 3}, random_values(rng, 18), true);
    Tensor w = Tensor::from({3, 2}, random_values(rng, 6), true);
    Tensor bias = Tensor::from({1, 3}, random_values(rng, 3), true);
    Tensor tgt = Tensor::from({6, 3}, random_values(rng, 18), false);

    const auto check = [&](const char* what, std::vector<Tensor*> params,
                           std::function<Tape::Var(Tape&)> build) {
      INFO(what << " seed " << seed);
      CHECK(gradcheck(std::move(params), build) < 1e-4);
    };

    check("matmul", {&a, &w}, [&](Tape& t) {
      return t.sse(t.matmul(t.leaf(a), t.leaf(w)), t.constant(6, 2, std::vector<double>(12, 0.3)));
    });
    check("add", {&a, &b}, [&](Tape& t) { return t.sum(t.add(t.leaf(a), t.leaf(b))); });
    check("sub", {&a, &b}, [&](Tape& t) {
      return t.sse(t.sub(t.leaf(a), t.leaf(b)), t.leaf(tgt));
    });
    check("mul", {&a, &b}, [&](Tape& t) { return t.sum(t.mul(t.leaf(a), t.leaf(b))); });
    check("add_scaled", {&a, &b}, [&](Tape& t) {
      return t.sse(t.add_scaled(t.leaf(a), t.leaf(b), -0.7), t.leaf(tgt));
    });
    check("scale", {&a}, [&](Tape& t) { return t.sum(t.scale(t.leaf(a), 1.3)); });
    check("add_rowvec", {&a, &bias}, [&](Tape& t) {
      return t.sse(t.add_rowvec(t.leaf(a), t.leaf(bias)), t.leaf(tgt));
    });
    check("relu", {&a}, [&](Tape& t) { return t.sse(t.relu(t.leaf(a)), t.leaf(tgt)); });
    check("softplus", {&a}, [&](Tape& t) { return t.sse(t.softplus(t.leaf(a)), t.leaf(tgt)); });
    check("sigmoid", {&a}, [&](Tape& t) { return t.sse(t.sigmoid(t.leaf(a)), t.leaf(tgt)); });
    check("dense_block_mix", {&a}, [&](Tape& t) {
      return t.sse(t.dense_block_mix(t.leaf(a), dense, 3), t.leaf(tgt));
    });
    check("dense_block_mix_multi", {&a}, [&](Tape& t) {
      return t.sse(t.dense_block_mix_multi(t.leaf(a), mats, 3), t.leaf(tgt));
    });
    check("sparse_block_mix", {&a}, [&](Tape& t) {
      return t.sse(t.sparse_block_mix(t.leaf(a), csr), t.leaf(tgt));
    });
    check("mean_rows_blocks", {&a}, [&](Tape& t) {
      return t.sum(t.mean_rows_blocks(t.leaf(a), 3));
    });
    check("repeat_rows_blocks", {&w}, [&](Tape& t) {
      return t.sse(t.repeat_rows_blocks(t.leaf(w), 3),
                   t.constant(6, 2, std::vector<double>(12, 0.1)));
    });
    check("concat_cols", {&a, &b}, [&](Tape& t) {
      return t.sum(t.concat_cols(std::vector<Tape::Var>{t.leaf(a), t.leaf(b)}));
    });
    check("concat_rows", {&a, &w}, [&](Tape& t) {
      Tape::Var pad = t.matmul(t.leaf(a), t.leaf(w));  // 6 x 2
      return t.sum(t.concat_rows(std::vector<Tape::Var>{pad, t.leaf(w)}));
    });
    check("row_gather", {&a}, [&](Tape& t) {
      return t.sum(t.row_gather(t.leaf(a), {5, 0, 0, 2}));
    });
    check("sse", {&a, &b}, [&](Tape& t) { return t.sse(t.leaf(a), t.leaf(b)); });
  }
}

TEST_CASE("check_finite aborts on non-finite results") {
  Tape tape;
  tape.check_finite = true;
  Tensor big = Tensor::from({1, 1}, {1e308});
  Tape::Var v = tape.leaf(big);
  CHECK_THROWS_AS(tape.mul(v, v), Error);
}

TEST_CASE("reset reuses the tape across passes") {
  Tensor x = Tensor::from({1, 2}, {1, 2}, true);
  Tape tape;
  for (int pass = 0; pass < 3; ++pass) {
    tape.reset();
    x.zero_grad();
    Tape::Var v = tape.leaf(x);
    tape.backward(tape.sum(tape.mul(v, v)));
    CHECK(x.grad()[0] == doctest::Approx(2.0));
    CHECK(x.grad()[1] == doctest::Approx(4.0));
  }
}

TEST_SUITE_END();
