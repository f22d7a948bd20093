#include "medforum/neural.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace medforum::neural {

namespace {

double glorot_limit(int fan_in, int fan_out) {
  return std::sqrt(6.0 / (fan_in + fan_out));
}

void fill_glorot(Tensor2D& t, int fan_in, int fan_out, util::Rng& rng) {
  const double lim = glorot_limit(fan_in, fan_out);
  for (double& x : t.v) x = rng.uniform(-lim, lim);
}

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

}  // namespace

// ---------------------------------------------------------------- Conv1D

Conv1D::Conv1D(int kernel, int in_channels, int filters, Activation act)
    : k_(kernel), cin_(in_channels), f_(filters), act_(act),
      w_(filters, kernel * in_channels), b_(filters, 0.0),
      gw_(filters, kernel * in_channels), gb_(filters, 0.0) {
  if (kernel < 1 || in_channels < 1 || filters < 1)
    throw DataError("convolution dimensions must be positive");
}

void Conv1D::init(util::Rng& rng) {
  fill_glorot(w_, k_ * cin_, f_, rng);
  std::fill(b_.begin(), b_.end(), 0.0);
}

void Conv1D::zero_init() {
  w_.fill(0.0);
  std::fill(b_.begin(), b_.end(), 0.0);
}

Tensor2D Conv1D::forward(const Tensor2D& input, Conv1DCache& cache) const {
  if (input.cols != cin_)
    throw DataError("convolution input has " + std::to_string(input.cols) +
                    " channels, layer expects " + std::to_string(cin_));
  const int L = input.rows;
  cache.input = input;
  cache.pre = Tensor2D(L, f_);
  Tensor2D out(L, f_);
  for (int t = 0; t < L; ++t) {
    for (int f = 0; f < f_; ++f) {
      double acc = b_[f];
      for (int j = 0; j < k_; ++j) {
        const int src = t + j;
        if (src >= L) break;  // implicit zero padding at the tail
        const double* wrow = &w_.v[static_cast<std::size_t>(f) * w_.cols + j * cin_];
        const double* xrow = &input.v[static_cast<std::size_t>(src) * cin_];
        for (int c = 0; c < cin_; ++c) acc += wrow[c] * xrow[c];
      }
      cache.pre(t, f) = acc;
      out(t, f) = (act_ == Activation::Relu && acc < 0.0) ? 0.0 : acc;
    }
  }
  return out;
}

Tensor2D Conv1D::backward(const Tensor2D& dout, const Conv1DCache& cache) {
  const int L = cache.input.rows;
  if (dout.rows != L || dout.cols != f_)
    throw DataError("convolution backward shape mismatch");
  Tensor2D dx(L, cin_);
  for (int t = 0; t < L; ++t) {
    for (int f = 0; f < f_; ++f) {
      double g = dout(t, f);
      if (act_ == Activation::Relu && cache.pre(t, f) <= 0.0) g = 0.0;
      if (g == 0.0) continue;
      gb_[f] += g;
      for (int j = 0; j < k_; ++j) {
        const int src = t + j;
        if (src >= L) break;
        double* gwrow = &gw_.v[static_cast<std::size_t>(f) * gw_.cols + j * cin_];
        const double* wrow = &w_.v[static_cast<std::size_t>(f) * w_.cols + j * cin_];
        const double* xrow = &cache.input.v[static_cast<std::size_t>(src) * cin_];
        double* dxrow = &dx.v[static_cast<std::size_t>(src) * cin_];
        for (int c = 0; c < cin_; ++c) {
          gwrow[c] += g * xrow[c];
          dxrow[c] += g * wrow[c];
        }
      }
    }
  }
  return dx;
}

std::vector<ParamView> Conv1D::params(const std::string& prefix) {
  return {
      {w_.v.data(), gw_.v.data(), w_.v.size(), prefix + ".w"},
      {b_.data(), gb_.data(), b_.size(), prefix + ".b"},
  };
}

void Conv1D::zero_grads() {
  gw_.fill(0.0);
  std::fill(gb_.begin(), gb_.end(), 0.0);
}

// ------------------------------------------------------------- LstmLayer

LstmLayer::LstmLayer(int in_channels, int hidden)
    : cin_(in_channels), h_(hidden),
      wx_(4 * hidden, in_channels), wh_(4 * hidden, hidden), b_(4 * hidden, 0.0),
      gwx_(4 * hidden, in_channels), gwh_(4 * hidden, hidden), gb_(4 * hidden, 0.0) {
  if (in_channels < 1 || hidden < 1)
    throw DataError("lstm dimensions must be positive");
}

void LstmLayer::init(util::Rng& rng) {
  fill_glorot(wx_, cin_, h_, rng);
  fill_glorot(wh_, h_, h_, rng);
  std::fill(b_.begin(), b_.end(), 0.0);
  for (int i = h_; i < 2 * h_; ++i) b_[i] = 1.0;  // forget gate open at start
}

void LstmLayer::zero_init() {
  wx_.fill(0.0);
  wh_.fill(0.0);
  std::fill(b_.begin(), b_.end(), 0.0);
}

Tensor2D LstmLayer::forward(const Tensor2D& input, LstmCache& cache) const {
  if (input.cols != cin_)
    throw DataError("lstm input has " + std::to_string(input.cols) +
                    " channels, layer expects " + std::to_string(cin_));
  const int L = input.rows;
  cache.input = input;
  cache.gates = Tensor2D(L, 4 * h_);
  cache.cell = Tensor2D(L, h_);
  cache.hidden = Tensor2D(L, h_);
  cache.tanh_cell = Tensor2D(L, h_);

  std::vector<double> pre(4 * h_);
  for (int t = 0; t < L; ++t) {
    const double* x = &input.v[static_cast<std::size_t>(t) * cin_];
    const double* hprev = t > 0 ? &cache.hidden.v[static_cast<std::size_t>(t - 1) * h_] : nullptr;
    for (int r = 0; r < 4 * h_; ++r) {
      double acc = b_[r];
      const double* wxr = &wx_.v[static_cast<std::size_t>(r) * cin_];
      for (int c = 0; c < cin_; ++c) acc += wxr[c] * x[c];
      if (hprev) {
        const double* whr = &wh_.v[static_cast<std::size_t>(r) * h_];
        for (int c = 0; c < h_; ++c) acc += whr[c] * hprev[c];
      }
      pre[r] = acc;
    }
    for (int u = 0; u < h_; ++u) {
      const double gi = sigmoid(pre[u]);
      const double gf = sigmoid(pre[h_ + u]);
      const double gg = std::tanh(pre[2 * h_ + u]);
      const double go = sigmoid(pre[3 * h_ + u]);
      const double cprev = t > 0 ? cache.cell(t - 1, u) : 0.0;
      const double c = gf * cprev + gi * gg;
      const double tc = std::tanh(c);
      cache.gates(t, u) = gi;
      cache.gates(t, h_ + u) = gf;
      cache.gates(t, 2 * h_ + u) = gg;
      cache.gates(t, 3 * h_ + u) = go;
      cache.cell(t, u) = c;
      cache.tanh_cell(t, u) = tc;
      cache.hidden(t, u) = go * tc;
    }
  }
  return cache.hidden;
}

Tensor2D LstmLayer::backward(const Tensor2D& dout, const LstmCache& cache) {
  const int L = cache.input.rows;
  if (dout.rows != L || dout.cols != h_)
    throw DataError("lstm backward shape mismatch");
  Tensor2D dx(L, cin_);
  std::vector<double> dh_next(h_, 0.0);  // gradient flowing into h_t from t+1
  std::vector<double> dc_next(h_, 0.0);
  std::vector<double> dpre(4 * h_);

  for (int t = L - 1; t >= 0; --t) {
    for (int u = 0; u < h_; ++u) {
      const double gi = cache.gates(t, u);
      const double gf = cache.gates(t, h_ + u);
      const double gg = cache.gates(t, 2 * h_ + u);
      const double go = cache.gates(t, 3 * h_ + u);
      const double tc = cache.tanh_cell(t, u);
      const double cprev = t > 0 ? cache.cell(t - 1, u) : 0.0;

      const double dh = dout(t, u) + dh_next[u];
      double dc = dc_next[u] + dh * go * (1.0 - tc * tc);

      dpre[u] = dc * gg * gi * (1.0 - gi);                 // input gate
      dpre[h_ + u] = dc * cprev * gf * (1.0 - gf);         // forget gate
      dpre[2 * h_ + u] = dc * gi * (1.0 - gg * gg);        // candidate
      dpre[3 * h_ + u] = dh * tc * go * (1.0 - go);        // output gate
      dc_next[u] = dc * gf;
    }

    const double* x = &cache.input.v[static_cast<std::size_t>(t) * cin_];
    const double* hprev = t > 0 ? &cache.hidden.v[static_cast<std::size_t>(t - 1) * h_] : nullptr;
    std::fill(dh_next.begin(), dh_next.end(), 0.0);
    double* dxrow = &dx.v[static_cast<std::size_t>(t) * cin_];
    for (int r = 0; r < 4 * h_; ++r) {
      const double g = dpre[r];
      if (g == 0.0) continue;
      gb_[r] += g;
      double* gwxr = &gwx_.v[static_cast<std::size_t>(r) * cin_];
      const double* wxr = &wx_.v[static_cast<std::size_t>(r) * cin_];
      for (int c = 0; c < cin_; ++c) {
        gwxr[c] += g * x[c];
        dxrow[c] += g * wxr[c];
      }
      if (hprev) {
        double* gwhr = &gwh_.v[static_cast<std::size_t>(r) * h_];
        const double* whr = &wh_.v[static_cast<std::size_t>(r) * h_];
        for (int c = 0; c < h_; ++c) {
          gwhr[c] += g * hprev[c];
          dh_next[c] += g * whr[c];
        }
      }
    }
  }
  return dx;
}

std::vector<ParamView> LstmLayer::params(const std::string& prefix) {
  return {
      {wx_.v.data(), gwx_.v.data(), wx_.v.size(), prefix + ".wx"},
      {wh_.v.data(), gwh_.v.data(), wh_.v.size(), prefix + ".wh"},
      {b_.data(), gb_.data(), b_.size(), prefix + ".b"},
  };
}

void LstmLayer::zero_grads() {
  gwx_.fill(0.0);
  gwh_.fill(0.0);
  std::fill(gb_.begin(), gb_.end(), 0.0);
}

// ----------------------------------------------------------- max pooling

std::vector<double> maxpool_time(const Tensor2D& input, std::vector<int>& argmax) {
  if (input.rows < 1) throw DataError("max pooling requires at least one time step");
  std::vector<double> out(input.cols);
  argmax.assign(input.cols, 0);
  for (int c = 0; c < input.cols; ++c) {
    double best = input(0, c);
    int best_t = 0;
    for (int t = 1; t < input.rows; ++t) {
      if (input(t, c) > best) {
        best = input(t, c);
        best_t = t;
      }
    }
    out[c] = best;
    argmax[c] = best_t;
  }
  return out;
}

Tensor2D maxpool_time_backward(const std::vector<double>& dout,
                               const std::vector<int>& argmax, int rows, int cols) {
  if (static_cast<int>(dout.size()) != cols || static_cast<int>(argmax.size()) != cols)
    throw DataError("max pooling backward shape mismatch");
  Tensor2D dx(rows, cols);
  for (int c = 0; c < cols; ++c) dx(argmax[c], c) += dout[c];
  return dx;
}

// ------------------------------------------------------------------ Dense

Dense::Dense(int in, int out, Activation act)
    : in_(in), out_(out), act_(act), w_(out, in), b_(out, 0.0), gw_(out, in), gb_(out, 0.0) {
  if (in < 1 || out < 1) throw DataError("dense dimensions must be positive");
}

void Dense::init(util::Rng& rng) {
  fill_glorot(w_, in_, out_, rng);
  std::fill(b_.begin(), b_.end(), 0.0);
}

void Dense::zero_init() {
  w_.fill(0.0);
  std::fill(b_.begin(), b_.end(), 0.0);
}

std::vector<double> Dense::forward(const std::vector<double>& input, DenseCache& cache) const {
  if (static_cast<int>(input.size()) != in_)
    throw DataError("dense input has " + std::to_string(input.size()) +
                    " features, layer expects " + std::to_string(in_));
  cache.input = input;
  cache.pre.resize(out_);
  std::vector<double> out(out_);
  for (int r = 0; r < out_; ++r) {
    double acc = b_[r];
    const double* wr = &w_.v[static_cast<std::size_t>(r) * in_];
    for (int c = 0; c < in_; ++c) acc += wr[c] * input[c];
    cache.pre[r] = acc;
    out[r] = (act_ == Activation::Relu && acc < 0.0) ? 0.0 : acc;
  }
  return out;
}

std::vector<double> Dense::backward(const std::vector<double>& dout, const DenseCache& cache) {
  if (static_cast<int>(dout.size()) != out_)
    throw DataError("dense backward shape mismatch");
  std::vector<double> dx(in_, 0.0);
  for (int r = 0; r < out_; ++r) {
    double g = dout[r];
    if (act_ == Activation::Relu && cache.pre[r] <= 0.0) g = 0.0;
    if (g == 0.0) continue;
    gb_[r] += g;
    double* gwr = &gw_.v[static_cast<std::size_t>(r) * in_];
    const double* wr = &w_.v[static_cast<std::size_t>(r) * in_];
    for (int c = 0; c < in_; ++c) {
      gwr[c] += g * cache.input[c];
      dx[c] += g * wr[c];
    }
  }
  return dx;
}

std::vector<ParamView> Dense::params(const std::string& prefix) {
  return {
      {w_.v.data(), gw_.v.data(), w_.v.size(), prefix + ".w"},
      {b_.data(), gb_.data(), b_.size(), prefix + ".b"},
  };
}

void Dense::zero_grads() {
  gw_.fill(0.0);
  std::fill(gb_.begin(), gb_.end(), 0.0);
}

// ----------------------------------------------------- softmax + loss

SoftmaxResult softmax_cross_entropy(const std::vector<double>& logits, int target) {
  if (target < 0 || target >= static_cast<int>(logits.size()))
    throw DataError("softmax target class out of range");
  std::vector<double> one_hot(logits.size(), 0.0);
  one_hot[target] = 1.0;
  return softmax_cross_entropy(logits, one_hot);
}

SoftmaxResult softmax_cross_entropy(const std::vector<double>& logits,
                                    const std::vector<double>& one_hot_target) {
  if (logits.empty()) throw DataError("softmax requires at least one logit");
  if (one_hot_target.size() != logits.size())
    throw DataError("softmax target size mismatch");
  double sum = 0.0;
  int hot = -1;
  for (std::size_t i = 0; i < one_hot_target.size(); ++i) {
    sum += one_hot_target[i];
    if (one_hot_target[i] == 1.0) hot = static_cast<int>(i);
    else if (one_hot_target[i] != 0.0)
      throw DataError("softmax target must be one-hot");
  }
  if (hot < 0 || sum != 1.0) throw DataError("softmax target must be one-hot");

  SoftmaxResult res;
  const double mx = *std::max_element(logits.begin(), logits.end());
  res.probs.resize(logits.size());
  double z = 0.0;
  for (std::size_t i = 0; i < logits.size(); ++i) {
    res.probs[i] = std::exp(logits[i] - mx);
    z += res.probs[i];
  }
  for (double& p : res.probs) p /= z;
  res.loss = -std::log(std::max(res.probs[hot], std::numeric_limits<double>::min()));
  res.dlogits = res.probs;
  res.dlogits[hot] -= 1.0;
  return res;
}

// ------------------------------------------------------------------- Adam

void Adam::step(const std::vector<ParamView>& params) {
  if (m_.empty()) {
    m_.resize(params.size());
    v_.resize(params.size());
    for (std::size_t i = 0; i < params.size(); ++i) {
      m_[i].assign(params[i].size, 0.0);
      v_[i].assign(params[i].size, 0.0);
    }
  } else if (m_.size() != params.size()) {
    throw DataError("optimizer was initialized with a different parameter set");
  }
  ++t_;
  const double bc1 = 1.0 - std::pow(cfg_.beta1, t_);
  const double bc2 = 1.0 - std::pow(cfg_.beta2, t_);
  for (std::size_t i = 0; i < params.size(); ++i) {
    const ParamView& p = params[i];
    if (m_[i].size() != p.size)
      throw DataError("optimizer state does not match parameter " + p.name);
    for (std::size_t j = 0; j < p.size; ++j) {
      const double g = p.grad[j];
      m_[i][j] = cfg_.beta1 * m_[i][j] + (1.0 - cfg_.beta1) * g;
      v_[i][j] = cfg_.beta2 * v_[i][j] + (1.0 - cfg_.beta2) * g * g;
      const double mhat = m_[i][j] / bc1;
      const double vhat = v_[i][j] / bc2;
      p.value[j] -= cfg_.learning_rate * mhat / (std::sqrt(vhat) + cfg_.epsilon);
    }
  }
}

// --------------------------------------------------- gradient checking

double relative_error(double analytic, double numeric) {
  const double denom = std::max({std::fabs(analytic), std::fabs(numeric), 1e-3});
  return std::fabs(analytic - numeric) / denom;
}

double finite_difference_check(const std::vector<ParamView>& params,
                               const std::function<double()>& loss_fn,
                               double epsilon) {
  if (epsilon <= 0.0) throw DataError("finite difference step must be positive");
  double worst = 0.0;
  for (const ParamView& p : params) {
    for (std::size_t j = 0; j < p.size; ++j) {
      const double saved = p.value[j];
      p.value[j] = saved + epsilon;
      const double lp = loss_fn();
      p.value[j] = saved - epsilon;
      const double lm = loss_fn();
      p.value[j] = saved;
      const double numeric = (lp - lm) / (2.0 * epsilon);
      worst = std::max(worst, relative_error(p.grad[j], numeric));
    }
  }
  return worst;
}

}  // namespace medforum::neural
