#include <doctest.h>

#include <cmath>
#include <string>
#include <vector>

#include "medforum/neural.hpp"
#include "medforum/util.hpp"

using namespace medforum;
using namespace medforum::neural;

namespace {

double* param_value(std::vector<ParamView>& ps, const std::string& name) {
  for (auto& p : ps)
    if (p.name == name) return p.value;
  REQUIRE_MESSAGE(false, "no parameter named " << name);
  return nullptr;
}

Tensor2D random_tensor(int rows, int cols, util::Rng& rng, double lo = -1.0, double hi = 1.0) {
  Tensor2D t(rows, cols);
  for (double& x : t.v) x = rng.uniform(lo, hi);
  return t;
}

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

}  // namespace

TEST_CASE("kernel-1 identity convolution passes the input through") {
  Conv1D conv(1, 2, 2, Activation::None);
  conv.zero_init();
  auto ps = conv.params("c");
  double* w = param_value(ps, "c.w");  // 2 x 2 row-major
  w[0] = 1.0;
  w[3] = 1.0;

  util::Rng rng(3);
  const Tensor2D input = random_tensor(4, 2, rng);
  Conv1DCache cache;
  const Tensor2D out = conv.forward(input, cache);
  REQUIRE(out.same_shape(input));
  for (std::size_t i = 0; i < input.v.size(); ++i) CHECK(out.v[i] == doctest::Approx(input.v[i]));
}

TEST_CASE("same padding keeps the time dimension at full width") {
  Conv1D conv(2, 200, 200);
  util::Rng rng(5);
  conv.init(rng);
  const Tensor2D input = random_tensor(150, 200, rng, -0.1, 0.1);
  Conv1DCache cache;
  const Tensor2D out = conv.forward(input, cache);
  CHECK(out.rows == 150);
  CHECK(out.cols == 200);
}

TEST_CASE("kernel-2 convolution tail window sees implicit zeros") {
  // One filter, one channel, weights [1, 1], no activation: out[t] = x[t] + x[t+1],
  // with x[L] treated as zero.
  Conv1D conv(2, 1, 1, Activation::None);
  conv.zero_init();
  auto ps = conv.params("c");
  double* w = param_value(ps, "c.w");
  w[0] = 1.0;
  w[1] = 1.0;
  Tensor2D input(3, 1);
  input(0, 0) = 5.0;
  input(1, 0) = 7.0;
  input(2, 0) = 11.0;
  Conv1DCache cache;
  const Tensor2D out = conv.forward(input, cache);
  CHECK(out(0, 0) == doctest::Approx(12.0));
  CHECK(out(1, 0) == doctest::Approx(18.0));
  CHECK(out(2, 0) == doctest::Approx(11.0));
}

namespace {

// Loss used by the gradient oracles: fixed random linear functional of the
// layer output, so dLoss/dout is a constant tensor.
struct LinearLoss {
  Tensor2D coeff;
  explicit LinearLoss(int rows, int cols, std::uint64_t seed) {
    util::Rng rng(seed);
    coeff = random_tensor(rows, cols, rng);
  }
  double value(const Tensor2D& out) const {
    double s = 0.0;
    for (std::size_t i = 0; i < out.v.size(); ++i) s += coeff.v[i] * out.v[i];
    return s;
  }
};

}  // namespace

TEST_CASE("convolution gradients match finite differences") {
  Conv1D conv(2, 3, 4);
  util::Rng rng(11);
  conv.init(rng);
  const Tensor2D input = random_tensor(5, 3, rng);
  const LinearLoss loss(5, 4, 77);

  Conv1DCache cache;
  conv.zero_grads();
  const Tensor2D out = conv.forward(input, cache);
  conv.backward(loss.coeff, cache);

  auto ps = conv.params("c");
  const double err = finite_difference_check(ps, [&]() {
    Conv1DCache c2;
    return loss.value(conv.forward(input, c2));
  });
  CHECK(err < 1e-6);
}

TEST_CASE("convolution input gradients match finite differences") {
  Conv1D conv(2, 3, 4, Activation::None);
  util::Rng rng(13);
  conv.init(rng);
  Tensor2D input = random_tensor(5, 3, rng);
  const LinearLoss loss(5, 4, 78);

  Conv1DCache cache;
  conv.zero_grads();
  conv.forward(input, cache);
  const Tensor2D dx = conv.backward(loss.coeff, cache);

  // Treat the input itself as the parameter vector.
  Tensor2D dx_copy = dx;
  std::vector<ParamView> view = {{input.v.data(), dx_copy.v.data(), input.v.size(), "x"}};
  const double err = finite_difference_check(view, [&]() {
    Conv1DCache c2;
    return loss.value(conv.forward(input, c2));
  });
  CHECK(err < 1e-6);
}

TEST_CASE("lstm with zero weights and zero input stays at zero") {
  LstmLayer lstm(3, 4);
  lstm.zero_init();
  Tensor2D input(6, 3);
  LstmCache cache;
  const Tensor2D out = lstm.forward(input, cache);
  REQUIRE(out.rows == 6);
  REQUIRE(out.cols == 4);
  for (double v : out.v) CHECK(v == 0.0);
}

TEST_CASE("single-step lstm matches the closed-form gate equations") {
  LstmLayer lstm(1, 1);
  lstm.zero_init();
  auto ps = lstm.params("l");
  double* wx = param_value(ps, "l.wx");  // rows: input, forget, candidate, output
  wx[0] = 1.0;
  wx[1] = -0.5;
  wx[2] = 2.0;
  wx[3] = 0.5;

  Tensor2D input(1, 1);
  input(0, 0) = 0.3;
  LstmCache cache;
  const Tensor2D out = lstm.forward(input, cache);

  const double gi = sigmoid(0.3);
  const double gg = std::tanh(0.6);
  const double go = sigmoid(0.15);
  const double c = gi * gg;  // forget gate multiplies a zero initial cell
  CHECK(out(0, 0) == doctest::Approx(go * std::tanh(c)).epsilon(1e-12));
}

TEST_CASE("two-step lstm carries cell and hidden state forward") {
  LstmLayer lstm(1, 1);
  lstm.zero_init();
  auto ps = lstm.params("l");
  double* wx = param_value(ps, "l.wx");
  double* wh = param_value(ps, "l.wh");
  double* b = param_value(ps, "l.b");
  wx[0] = 0.7;
  wx[1] = 0.4;
  wx[2] = 1.1;
  wx[3] = -0.3;
  wh[0] = 0.2;
  wh[1] = 0.6;
  wh[2] = -0.8;
  wh[3] = 0.5;
  b[1] = 1.0;  // forget-gate bias

  Tensor2D input(2, 1);
  input(0, 0) = 0.5;
  input(1, 0) = -0.25;
  LstmCache cache;
  const Tensor2D out = lstm.forward(input, cache);

  double h = 0.0, c = 0.0;
  for (int t = 0; t < 2; ++t) {
    const double x = input(t, 0);
    const double gi = sigmoid(0.7 * x + 0.2 * h);
    const double gf = sigmoid(0.4 * x + 0.6 * h + 1.0);
    const double gg = std::tanh(1.1 * x - 0.8 * h);
    const double go = sigmoid(-0.3 * x + 0.5 * h);
    c = gf * c + gi * gg;
    h = go * std::tanh(c);
    CHECK(out(t, 0) == doctest::Approx(h).epsilon(1e-12));
  }
}

TEST_CASE("lstm gradients match finite differences") {
  LstmLayer lstm(3, 5);
  util::Rng rng(17);
  lstm.init(rng);
  const Tensor2D input = random_tensor(4, 3, rng);
  const LinearLoss loss(4, 5, 79);

  LstmCache cache;
  lstm.zero_grads();
  lstm.forward(input, cache);
  lstm.backward(loss.coeff, cache);

  auto ps = lstm.params("l");
  const double err = finite_difference_check(ps, [&]() {
    LstmCache c2;
    return loss.value(lstm.forward(input, c2));
  });
  CHECK(err < 1e-6);
}

TEST_CASE("lstm input gradients match finite differences") {
  LstmLayer lstm(2, 3);
  util::Rng rng(19);
  lstm.init(rng);
  Tensor2D input = random_tensor(4, 2, rng);
  const LinearLoss loss(4, 3, 80);

  LstmCache cache;
  lstm.zero_grads();
  lstm.forward(input, cache);
  Tensor2D dx = lstm.backward(loss.coeff, cache);

  std::vector<ParamView> view = {{input.v.data(), dx.v.data(), input.v.size(), "x"}};
  const double err = finite_difference_check(view, [&]() {
    LstmCache c2;
    return loss.value(lstm.forward(input, c2));
  });
  CHECK(err < 1e-6);
}

TEST_CASE("max pooling takes the channelwise maximum over time") {
  Tensor2D input(3, 2);
  input(0, 0) = 1.0;
  input(1, 0) = 3.0;
  input(2, 0) = 2.0;
  input(0, 1) = 5.0;
  input(1, 1) = 5.0;
  input(2, 1) = 1.0;

  std::vector<int> argmax;
  const std::vector<double> pooled = maxpool_time(input, argmax);
  CHECK(pooled == std::vector<double>{3.0, 5.0});
  CHECK(argmax == std::vector<int>{1, 0});  // ties keep the first occurrence

  const Tensor2D back = maxpool_time_backward({10.0, 20.0}, argmax, 3, 2);
  CHECK(back(1, 0) == 10.0);
  CHECK(back(0, 1) == 20.0);
  double total = 0.0;
  for (double v : back.v) total += v;
  CHECK(total == 30.0);  // everything else stays zero
}

TEST_CASE("dense gradients match finite differences") {
  for (Activation act : {Activation::Relu, Activation::None}) {
    Dense dense(4, 3, act);
    util::Rng rng(23);
    dense.init(rng);
    std::vector<double> input(4);
    for (auto& x : input) x = rng.uniform(-1.0, 1.0);
    std::vector<double> coeff(3);
    for (auto& x : coeff) x = rng.uniform(-1.0, 1.0);

    DenseCache cache;
    dense.zero_grads();
    dense.forward(input, cache);
    dense.backward(coeff, cache);

    auto ps = dense.params("d");
    const double err = finite_difference_check(ps, [&]() {
      DenseCache c2;
      const auto out = dense.forward(input, c2);
      double s = 0.0;
      for (int i = 0; i < 3; ++i) s += coeff[i] * out[i];
      return s;
    });
    CHECK(err < 1e-6);
  }
}

TEST_CASE("softmax cross-entropy") {
  SUBCASE("uniform logits give uniform probabilities") {
    const auto res = softmax_cross_entropy({0.0, 0.0, 0.0}, 0);
    for (double p : res.probs) CHECK(p == doctest::Approx(1.0 / 3.0));
    CHECK(res.loss == doctest::Approx(std::log(3.0)));
  }
  SUBCASE("large logits stay finite") {
    const auto res = softmax_cross_entropy({1000.0, 0.0, 0.0}, 0);
    CHECK(std::isfinite(res.loss));
    CHECK(res.probs[0] == doctest::Approx(1.0));
    CHECK(res.loss == doctest::Approx(0.0));
  }
  SUBCASE("probabilities sum to one") {
    const auto res = softmax_cross_entropy({0.3, -2.0, 1.7}, 2);
    double s = 0.0;
    for (double p : res.probs) s += p;
    CHECK(s == doctest::Approx(1.0).epsilon(1e-12));
  }
  SUBCASE("gradient is probs minus one-hot and sums to zero") {
    const auto res = softmax_cross_entropy({0.5, 0.1, -0.4}, 1);
    CHECK(res.dlogits[0] == doctest::Approx(res.probs[0]));
    CHECK(res.dlogits[1] == doctest::Approx(res.probs[1] - 1.0));
    CHECK(res.dlogits[2] == doctest::Approx(res.probs[2]));
    CHECK(res.dlogits[0] + res.dlogits[1] + res.dlogits[2] == doctest::Approx(0.0));
  }
  SUBCASE("one-hot overload agrees with the index overload") {
    const auto a = softmax_cross_entropy({0.5, 0.1, -0.4}, 2);
    const auto b = softmax_cross_entropy({0.5, 0.1, -0.4}, {0.0, 0.0, 1.0});
    CHECK(a.loss == b.loss);
    CHECK(a.dlogits == b.dlogits);
  }
  SUBCASE("invalid targets are rejected") {
    CHECK_THROWS_AS(softmax_cross_entropy({0.0, 0.0}, 2), DataError);
    CHECK_THROWS_AS(softmax_cross_entropy({0.0, 0.0}, -1), DataError);
    CHECK_THROWS_AS(softmax_cross_entropy({0.0, 0.0}, {0.5, 0.5}), DataError);
    CHECK_THROWS_AS(softmax_cross_entropy({0.0, 0.0}, {1.0, 1.0}), DataError);
  }
}

TEST_CASE("softmax gradient matches finite differences") {
  std::vector<double> logits = {0.4, -1.2, 0.9};
  auto res = softmax_cross_entropy(logits, 1);
  std::vector<double> grad = res.dlogits;
  std::vector<ParamView> view = {{logits.data(), grad.data(), logits.size(), "logits"}};
  const double err = finite_difference_check(
      view, [&]() { return softmax_cross_entropy(logits, 1).loss; });
  CHECK(err < 1e-9);
}

TEST_CASE("optimizer") {
  SUBCASE("zero gradients leave parameters untouched") {
    std::vector<double> value = {1.0, -2.0};
    std::vector<double> grad = {0.0, 0.0};
    std::vector<ParamView> ps = {{value.data(), grad.data(), 2, "p"}};
    Adam opt;
    opt.step(ps);
    CHECK(value == std::vector<double>{1.0, -2.0});
    CHECK(opt.step_count() == 1);
  }
  SUBCASE("minimizes a quadratic") {
    double x = 10.0, g = 0.0;
    std::vector<ParamView> ps = {{&x, &g, 1, "x"}};
    AdamConfig cfg;
    cfg.learning_rate = 0.05;
    Adam opt(cfg);
    for (int i = 0; i < 500; ++i) {
      g = 2.0 * (x - 3.0);
      opt.step(ps);
    }
    CHECK(std::abs(x - 3.0) < 1e-3);
    CHECK(opt.step_count() == 500);
  }
  SUBCASE("shape changes between steps are rejected") {
    std::vector<double> value = {1.0, 2.0};
    std::vector<double> grad = {0.1, 0.1};
    std::vector<ParamView> ps = {{value.data(), grad.data(), 2, "p"}};
    Adam opt;
    opt.step(ps);
    std::vector<ParamView> wrong = {{value.data(), grad.data(), 1, "p"}};
    CHECK_THROWS_AS(opt.step(wrong), DataError);
  }
}

TEST_CASE("finite-difference scaffolding") {
  SUBCASE("relative error uses a floor for tiny magnitudes") {
    CHECK(relative_error(1.0, 1.0) == 0.0);
    CHECK(relative_error(0.0, 1e-6) == doctest::Approx(1e-3));
    CHECK(relative_error(2.0, 1.0) == doctest::Approx(0.5));
  }
  SUBCASE("non-positive epsilon is rejected") {
    double x = 1.0, g = 1.0;
    std::vector<ParamView> ps = {{&x, &g, 1, "x"}};
    CHECK_THROWS_AS(finite_difference_check(ps, [&]() { return x; }, 0.0), DataError);
    CHECK_THROWS_AS(finite_difference_check(ps, [&]() { return x; }, -1e-5), DataError);
  }
  SUBCASE("exact gradient of a linear function scores almost zero") {
    double x = 2.0;
    double g = 3.0;  // d(3x)/dx
    std::vector<ParamView> ps = {{&x, &g, 1, "x"}};
    const double err = finite_difference_check(ps, [&]() { return 3.0 * x; });
    CHECK(err < 1e-9);
  }
  SUBCASE("a wrong gradient is caught") {
    double x = 2.0;
    double g = 4.0;  // deliberately wrong for 3x
    std::vector<ParamView> ps = {{&x, &g, 1, "x"}};
    const double err = finite_difference_check(ps, [&]() { return 3.0 * x; });
    CHECK(err > 0.1);
  }
}
