#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "medforum/util.hpp"

// Minimal dense tensor/layer kernel with exact analytic backpropagation.
// Everything runs in 64-bit floating point; layers own their parameters and
// matching gradient accumulators, while per-call activations live in cache
// structs owned by the caller so forward passes stay const and thread-safe.

namespace medforum::neural {

// Row-major (time steps x channels) matrix.
struct Tensor2D {
  int rows = 0, cols = 0;
  std::vector<double> v;

  Tensor2D() = default;
  Tensor2D(int r, int c) : rows(r), cols(c), v(static_cast<std::size_t>(r) * c, 0.0) {}

  double& operator()(int r, int c) { return v[static_cast<std::size_t>(r) * cols + c]; }
  double operator()(int r, int c) const { return v[static_cast<std::size_t>(r) * cols + c]; }

  void fill(double x) { std::fill(v.begin(), v.end(), x); }
  bool same_shape(const Tensor2D& o) const { return rows == o.rows && cols == o.cols; }
};

// Mutable view over one parameter tensor and its gradient accumulator.
struct ParamView {
  double* value = nullptr;
  double* grad = nullptr;
  std::size_t size = 0;
  std::string name;
};

enum class Activation { None, Relu };

// --- 1-D convolution over time, same padding (zero rows appended at the
// tail so the window starting at each step always fits).
struct Conv1DCache {
  Tensor2D input;
  Tensor2D pre;  // pre-activation outputs, needed for the ReLU mask
};

class Conv1D {
 public:
  Conv1D(int kernel, int in_channels, int filters, Activation act = Activation::Relu);

  void init(util::Rng& rng);  // Glorot-uniform weights, zero biases
  void zero_init();

  // input L x C_in -> output L x filters
  Tensor2D forward(const Tensor2D& input, Conv1DCache& cache) const;
  // Accumulates parameter gradients, returns gradient w.r.t. the input.
  Tensor2D backward(const Tensor2D& dout, const Conv1DCache& cache);

  std::vector<ParamView> params(const std::string& prefix);
  void zero_grads();

  int kernel() const { return k_; }
  int in_channels() const { return cin_; }
  int filters() const { return f_; }

 private:
  int k_, cin_, f_;
  Activation act_;
  Tensor2D w_;               // filters x (kernel * in_channels)
  std::vector<double> b_;    // filters
  Tensor2D gw_;
  std::vector<double> gb_;
};

// --- LSTM over the full sequence, zero initial state, returning every
// hidden step. Gate order in the stacked tensors is [input, forget,
// candidate, output].
struct LstmCache {
  Tensor2D input;
  Tensor2D gates;   // L x 4H, post-activation
  Tensor2D cell;    // L x H
  Tensor2D hidden;  // L x H
  Tensor2D tanh_cell;
};

class LstmLayer {
 public:
  LstmLayer(int in_channels, int hidden);

  void init(util::Rng& rng);  // Glorot weights, forget-gate bias 1
  void zero_init();

  Tensor2D forward(const Tensor2D& input, LstmCache& cache) const;
  Tensor2D backward(const Tensor2D& dout, const LstmCache& cache);

  std::vector<ParamView> params(const std::string& prefix);
  void zero_grads();

  int in_channels() const { return cin_; }
  int hidden() const { return h_; }

 private:
  int cin_, h_;
  Tensor2D wx_;              // 4H x C
  Tensor2D wh_;              // 4H x H
  std::vector<double> b_;    // 4H
  Tensor2D gwx_, gwh_;
  std::vector<double> gb_;
};

// --- Global max over time per channel. Backward routes the gradient to the
// first occurrence of the maximum.
std::vector<double> maxpool_time(const Tensor2D& input, std::vector<int>& argmax);
Tensor2D maxpool_time_backward(const std::vector<double>& dout,
                               const std::vector<int>& argmax, int rows, int cols);

// --- Fully connected layer.
struct DenseCache {
  std::vector<double> input;
  std::vector<double> pre;
};

class Dense {
 public:
  Dense(int in, int out, Activation act);

  void init(util::Rng& rng);
  void zero_init();

  std::vector<double> forward(const std::vector<double>& input, DenseCache& cache) const;
  std::vector<double> backward(const std::vector<double>& dout, const DenseCache& cache);

  std::vector<ParamView> params(const std::string& prefix);
  void zero_grads();

  int in_dim() const { return in_; }
  int out_dim() const { return out_; }

 private:
  int in_, out_;
  Activation act_;
  Tensor2D w_;  // out x in
  std::vector<double> b_;
  Tensor2D gw_;
  std::vector<double> gb_;
};

// --- Softmax with categorical cross-entropy, max-subtracted for stability.
struct SoftmaxResult {
  std::vector<double> probs;
  double loss = 0.0;
  std::vector<double> dlogits;  // probs - one_hot(target)
};

SoftmaxResult softmax_cross_entropy(const std::vector<double>& logits, int target);
SoftmaxResult softmax_cross_entropy(const std::vector<double>& logits,
                                    const std::vector<double>& one_hot_target);

// --- Adaptive-moment optimizer with bias correction.
struct AdamConfig {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

class Adam {
 public:
  explicit Adam(AdamConfig cfg = {}) : cfg_(cfg) {}

  // Applies one update using the gradients currently held in the views.
  // Moment buffers are allocated on the first call; later calls must pass
  // identically shaped views.
  void step(const std::vector<ParamView>& params);

  long step_count() const { return t_; }
  const AdamConfig& config() const { return cfg_; }

 private:
  AdamConfig cfg_;
  long t_ = 0;
  std::vector<std::vector<double>> m_, v_;
};

// --- Gradient verification. `loss_fn` must evaluate the loss at the current
// parameter values; the analytic gradients are read from the views as-is, so
// compute them before calling. Returns the worst relative error over all
// parameters, where the relative error of analytic a vs central-difference n
// is |a - n| / max(|a|, |n|, 1e-3); the floor keeps finite-difference noise
// on near-zero gradients from dominating.
double finite_difference_check(const std::vector<ParamView>& params,
                               const std::function<double()>& loss_fn,
                               double epsilon = 1e-5);

double relative_error(double analytic, double numeric);

}  // namespace medforum::neural
