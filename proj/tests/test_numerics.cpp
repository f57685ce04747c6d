#include <cmath>
#include <vector>

#include "doctest.h"

#include "fib/kernels.hpp"
#include "fib/ops.hpp"
#include "fib/optim.hpp"
#include "fib/rng.hpp"
#include "fib/tensor.hpp"
#include "test_util.hpp"

using namespace fib;
using testutil::random_tensor;

namespace {

std::vector<double> naive_matmul(const Tensor& a, const Tensor& b) {
  const std::size_t m = a.rows(), k = a.cols(), n = b.cols();
  std::vector<double> c(m * n, 0.0);
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < n; ++j)
      for (std::size_t p = 0; p < k; ++p) c[i * n + j] += a.at(i, p) * b.at(p, j);
  return c;
}

}  // namespace

TEST_CASE("matmul 2x3 by 3x4 matches the triple loop") {
  Rng rng(3);
  auto a = random_tensor({2, 3}, rng);
  auto b = random_tensor({3, 4}, rng);
  auto c = matmul(a, b);
  CHECK(c.shape() == Shape{2, 4});
  auto ref = naive_matmul(a, b);
  for (std::size_t i = 0; i < ref.size(); ++i) CHECK(c.values()[i] == doctest::Approx(ref[i]).epsilon(1e-14));
}

TEST_CASE("shape mismatch names both shapes") {
  auto a = Tensor::zeros({2, 3});
  auto b = Tensor::zeros({4, 2});
  try {
    matmul(a, b);
    FAIL("expected ShapeError");
  } catch (const ShapeError& e) {
    std::string msg = e.what();
    CHECK(msg.find("[2x3]") != std::string::npos);
    CHECK(msg.find("[4x2]") != std::string::npos);
  }
  CHECK_THROWS_AS(add(Tensor::zeros({2}), Tensor::zeros({3})), ShapeError);
}

TEST_CASE("sigmoid and tanh at zero") {
  CHECK(sigmoid(0.0) == 0.5);
  auto z = Tensor::zeros({1, 3});
  const auto s = sigmoid(z), t = fib::tanh(z);
  for (double v : s.values()) CHECK(v == 0.5);
  for (double v : t.values()) CHECK(v == 0.0);
}

TEST_CASE("softmax of a constant row is uniform and rows sum to one") {
  auto c = Tensor::full({1, 7}, 3.25);
  const auto sc = softmax(c);
  for (double v : sc.values()) CHECK(v == doctest::Approx(1.0 / 7).epsilon(1e-15));
  Rng rng(11);
  for (int trial = 0; trial < 50; ++trial) {
    auto x = random_tensor({5, 13}, rng, false, 10.0);
    auto p = softmax(x);
    for (std::size_t r = 0; r < 5; ++r) {
      double s = 0.0;
      for (std::size_t j = 0; j < 13; ++j) {
        const double v = p.at(r, j);
        CHECK(v > 0.0);
        CHECK(v < 1.0);
        s += v;
      }
      CHECK(std::abs(s - 1.0) < 1e-12);
    }
  }
}

TEST_CASE("batch norm on {-1, +1} with gamma 2") {
  auto x = Tensor::from({2, 1}, {-1.0, 1.0});
  auto g = Tensor::from({1}, {2.0});
  BatchStats st(1);
  auto y = batch_norm(x, g, st, BnMode::batch);
  const double expect = 2.0 / std::sqrt(1.0 + 1e-5);
  CHECK(y.values()[0] == doctest::Approx(-expect).epsilon(1e-15));
  CHECK(y.values()[1] == doctest::Approx(expect).epsilon(1e-15));
  CHECK(std::abs(y.values()[1] - 1.99999) < 1e-5);
}

TEST_CASE("batch norm of identical rows is exactly zero for any gamma") {
  Rng rng(5);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<double> row(6);
    for (auto& v : row) v = rng.normal() * 1e3;
    std::vector<double> vals;
    for (int r = 0; r < 9; ++r) vals.insert(vals.end(), row.begin(), row.end());
    auto x = Tensor::from({9, 6}, vals);
    auto g = random_tensor({6}, rng);
    BatchStats st(6);
    auto y = batch_norm(x, g, st, BnMode::batch);
    for (double v : y.values()) CHECK(v == 0.0);
  }
}

TEST_CASE("batch norm output has zero mean and variance var/(var+eps)") {
  Rng rng(17);
  for (int trial = 0; trial < 30; ++trial) {
    const std::size_t m = 2 + rng.uniform_int(30), n = 1 + rng.uniform_int(8);
    auto x = random_tensor({m, n}, rng, false, 0.5 + 5.0 * rng.uniform01());
    for (auto& v : x.mutable_values()) v += 100.0;
    BatchStats st(n);
    auto y = batch_norm(x, Tensor::full({n}, 1.0), st, BnMode::batch);
    for (std::size_t j = 0; j < n; ++j) {
      double mx = 0, my = 0;
      for (std::size_t r = 0; r < m; ++r) mx += x.at(r, j), my += y.at(r, j);
      mx /= m, my /= m;
      double vx = 0, vy = 0;
      for (std::size_t r = 0; r < m; ++r) {
        vx += (x.at(r, j) - mx) * (x.at(r, j) - mx);
        vy += (y.at(r, j) - my) * (y.at(r, j) - my);
      }
      vx /= m, vy /= m;
      CHECK(std::abs(my) < 1e-9);
      if (vx > 1e-5) CHECK(std::abs(vy - vx / (vx + 1e-5)) < 1e-6);
    }
  }
}

TEST_CASE("batch norm running stats: batch mode updates, population mode only reads") {
  auto x = Tensor::from({2, 1}, {1.0, 3.0});
  auto g = Tensor::from({1}, {1.0});
  BatchStats st(1, 0.1);
  batch_norm(x, g, st, BnMode::batch);
  CHECK(st.mean[0] == doctest::Approx(0.2));
  CHECK(st.variance[0] == doctest::Approx(0.9 * 1.0 + 0.1 * 1.0));
  const auto saved = st.mean;
  auto a = batch_norm(x, g, st, BnMode::population);
  auto b = batch_norm(x, g, st, BnMode::population);
  CHECK(st.mean == saved);
  CHECK(std::vector<double>(a.values().begin(), a.values().end()) ==
        std::vector<double>(b.values().begin(), b.values().end()));
  BatchStats st2(1);
  batch_norm(x, g, st2, BnMode::batch, {}, {.eps = 1e-5, .update_stats = false});
  CHECK(st2.mean[0] == 0.0);
  CHECK(st2.variance[0] == 1.0);
}

TEST_CASE("batch norm masked rows are excluded and produce zeros") {
  auto x = Tensor::from({3, 1}, {-1.0, 50.0, 1.0});
  std::vector<std::uint8_t> mask{1, 0, 1};
  BatchStats st(1);
  auto y = batch_norm(x, Tensor::from({1}, {1.0}), st, BnMode::batch, mask);
  CHECK(y.values()[1] == 0.0);
  CHECK(y.values()[0] == doctest::Approx(-1.0 / std::sqrt(1.0 + 1e-5)));
  CHECK_THROWS(batch_norm(x, Tensor::from({1}, {1.0}), st, BnMode::batch, std::vector<std::uint8_t>{0, 0, 0}));
  CHECK_THROWS_AS(batch_norm(x, Tensor::from({2}, {1.0, 1.0}), st, BnMode::batch), ShapeError);
}

TEST_CASE("backward of simple graphs") {
  Rng rng(2);
  auto x = random_tensor({3, 4}, rng, true);
  backward(sum(x));
  for (double g : x.grad()) CHECK(g == 1.0);

  x.zero_grad();
  backward(sum(hadamard(x, x)));
  for (std::size_t i = 0; i < x.numel(); ++i) CHECK(x.grad()[i] == doctest::Approx(2.0 * x.values()[i]));

  // Two paths into the same leaf accumulate.
  x.zero_grad();
  backward(sum(add(x, scale(x, 3.0))));
  for (double g : x.grad()) CHECK(g == doctest::Approx(4.0));

  // Unreached leaves keep their zeroed grads.
  auto unused = random_tensor({2}, rng, true);
  unused.zero_grad();
  x.zero_grad();
  backward(mean(x));
  for (double g : unused.grad()) CHECK(g == 0.0);

  CHECK_THROWS_AS(backward(x), ShapeError);
}

TEST_CASE("pick_rows with a negative id yields a zero row without gradient") {
  Rng rng(4);
  auto table = random_tensor({5, 3}, rng, true);
  std::vector<std::int64_t> ids{2, -1, 2};
  auto e = pick_rows(table, ids);
  for (std::size_t j = 0; j < 3; ++j) CHECK(e.at(1, j) == 0.0);
  table.zero_grad();
  backward(sum(e));
  for (std::size_t j = 0; j < 3; ++j) {
    CHECK(table.grad()[2 * 3 + j] == 2.0);
    CHECK(table.grad()[0 * 3 + j] == 0.0);
  }
}

TEST_CASE("grad check on quadratic and linear losses") {
  Rng rng(9);
  auto theta = random_tensor({4, 3}, rng, true);
  std::vector<Tensor> ps{theta};
  auto quad = [&] { return scale(sum(hadamard(theta, theta)), 0.5); };
  CHECK(grad_check(quad, ps).max_rel_error < 1e-7);
  auto w = random_tensor({4, 3}, rng);
  auto lin = [&] { return sum(hadamard(theta, w)); };
  CHECK(grad_check(lin, ps).max_rel_error < 1e-7);
}

TEST_CASE("grad check over random composite graphs") {
  // Random chains of the core ops on small operands; every op appears.
  Rng rng(21);
  for (int trial = 0; trial < 40; ++trial) {
    const std::size_t m = 2 + rng.uniform_int(3), n = 2 + rng.uniform_int(3);
    auto a = random_tensor({m, n}, rng, true);
    auto b = random_tensor({n, n}, rng, true);
    auto bias = random_tensor({n}, rng, true);
    auto g = Tensor::from({n}, std::vector<double>(n, 0.8), true);
    std::vector<std::int64_t> targets(m);
    for (auto& t : targets) t = static_cast<std::int64_t>(rng.uniform_int(n));
    const auto pick = rng.uniform_int(4);
    std::vector<Tensor> ps{a, b, bias, g};
    auto f = [&]() -> Tensor {
      auto h = add_bias(matmul(a, b), bias);
      switch (pick) {
        case 0: h = fib::tanh(h); break;
        case 1: h = sigmoid(h); break;
        case 2: h = hadamard(h, fib::tanh(a)); break;
        default: break;
      }
      BatchStats st(n);
      auto z = add(batch_norm(h, g, st, BnMode::batch), scale(h, 0.5));
      auto c = concat({slice_cols(z, 0, 1), z});
      return add(softmax_cross_entropy(z, targets), scale(mean(softmax(c)), 0.3));
    };
    auto r = grad_check(f, ps, 1e-5);
    INFO("trial " << trial << " pick " << pick << " a=" << r.analytic << " n=" << r.numeric);
    CHECK(r.max_rel_error < 1e-4);
  }
}

TEST_CASE("adam: zero grads leave parameters unchanged") {
  Rng rng(6);
  auto p = random_tensor({3, 3}, rng, true);
  p.zero_grad();
  const std::vector<double> before(p.values().begin(), p.values().end());
  std::vector<Tensor> ps{p};
  AdamState st(AdamConfig{}, ps);
  for (int i = 0; i < 10; ++i) adam_step(ps, st);
  CHECK(std::vector<double>(p.values().begin(), p.values().end()) == before);
  CHECK(st.step == 10);
}

TEST_CASE("adam: first step moves each entry by about -lr*sign(g)") {
  auto p = Tensor::from({4}, {0.0, 0.0, 0.0, 0.0}, true);
  p.zero_grad();
  const std::vector<double> g{0.5, -2.0, 1e-3, -7.0};
  std::copy(g.begin(), g.end(), p.mutable_grad().begin());
  std::vector<Tensor> ps{p};
  AdamState st(AdamConfig{.lr = 0.01}, ps);
  adam_step(ps, st);
  for (std::size_t i = 0; i < 4; ++i) CHECK(p.values()[i] == doctest::Approx(-0.01 * (g[i] > 0 ? 1 : -1)).epsilon(1e-4));
  // Grads are left for the caller to clear.
  CHECK(p.grad()[1] == -2.0);
}

TEST_CASE("adam converges on (theta-3)^2/2") {
  auto theta = Tensor::from({1}, {0.0}, true);
  std::vector<Tensor> ps{theta};
  AdamState st(AdamConfig{.lr = 0.1}, ps);
  for (int i = 0; i < 200; ++i) {
    zero_grads(ps);
    auto d = add(theta, Tensor::from({1}, {-3.0}));
    backward(scale(sum(hadamard(d, d)), 0.5));
    adam_step(ps, st);
  }
  CHECK(std::abs(theta.values()[0] - 3.0) < 0.1);
}

TEST_CASE("adam rejects missing grads") {
  // A tensor built without requires_grad never gets a grad buffer.
  auto p = Tensor::from({2}, {1.0, 2.0});
  std::vector<Tensor> ps{p};
  AdamState st(AdamConfig{}, ps);
  CHECK_THROWS(adam_step(ps, st));
}

TEST_CASE("clip_grad_norm scales to the limit") {
  auto p = Tensor::from({2}, {0.0, 0.0}, true);
  p.zero_grad();
  p.mutable_grad()[0] = 30.0;
  p.mutable_grad()[1] = 40.0;
  std::vector<Tensor> ps{p};
  CHECK(clip_grad_norm(ps, 5.0) == doctest::Approx(50.0));
  CHECK(p.grad()[0] == doctest::Approx(3.0));
  CHECK(p.grad()[1] == doctest::Approx(4.0));
}

TEST_CASE("parallel kernels are bit-identical to the serial reference") {
  kernels::set_num_threads(4);
  Rng rng(31);
  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t m = 1 + rng.uniform_int(90), k = 1 + rng.uniform_int(70), n = 1 + rng.uniform_int(80);
    std::vector<double> a(m * k), b(k * n), bt(m * n), c1(m * n), c2(m * n);
    for (auto& v : a) v = rng.normal();
    for (auto& v : b) v = rng.normal();
    for (auto& v : bt) v = rng.normal();
    kernels::serial::gemm_nn(a, b, c1, m, k, n, false);
    kernels::parallel::gemm_nn(a, b, c2, m, k, n, false);
    CHECK(c1 == c2);

    std::vector<double> t1(k * n, 1.0), t2(k * n, 1.0);
    kernels::serial::gemm_tn(a, bt, t1, m, k, n, true);
    kernels::parallel::gemm_tn(a, bt, t2, m, k, n, true);
    CHECK(t1 == t2);

    std::vector<double> u1(m * k), u2(m * k);
    kernels::serial::gemm_nt(bt, b, u1, m, n, k, false);
    kernels::parallel::gemm_nt(bt, b, u2, m, n, k, false);
    CHECK(u1 == u2);

    std::vector<std::uint8_t> mask(m);
    for (auto& v : mask) v = rng.uniform01() < 0.7;
    mask[0] = 1;
    std::vector<double> mu1(k), var1(k), mu2(k), var2(k);
    kernels::serial::column_moments(a, m, k, mask, {mu1, var1});
    kernels::parallel::column_moments(a, m, k, mask, {mu2, var2});
    CHECK(mu1 == mu2);
    CHECK(var1 == var2);
  }
  kernels::set_num_threads(1);
}

TEST_CASE("tensor construction validates shapes") {
  CHECK_THROWS_AS(Tensor::from({2, 2}, {1.0, 2.0, 3.0}), ShapeError);
  CHECK_THROWS_AS(Tensor::zeros({0, 3}), ShapeError);
  CHECK(Tensor::scalar(2.5).item() == 2.5);
  CHECK_THROWS_AS(Tensor::zeros({2}).item(), ShapeError);
}
