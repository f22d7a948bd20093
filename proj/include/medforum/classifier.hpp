#pragma once

#include <array>
#include <optional>
#include <string>
#include <vector>

#include "medforum/corpus.hpp"
#include "medforum/embeddings.hpp"
#include "medforum/metrics.hpp"
#include "medforum/neural.hpp"
#include "medforum/textprep.hpp"

// Sentiment architectures assembled from the neural kernel, plus training,
// prediction, model persistence, and k-fold evaluation.

namespace medforum::classifier {

enum class ArchKind { CnnBaseline, Lstm, CnnLstm, CnnLstmCnn };

std::string to_string(ArchKind k);
ArchKind parse_arch_kind(const std::string& s);

struct ArchitectureSpec {
  ArchKind kind = ArchKind::CnnLstmCnn;
  std::vector<int> filter_sizes = {1, 2};
  int filters = 200;
  int lstm_hidden = 200;
  int dense_hidden = 128;
  int num_classes = corpus::kNumSentiments;

  bool operator==(const ArchitectureSpec&) const = default;
};

struct TrainConfig {
  int batch_size = 32;
  int epochs = 10;
  double learning_rate = 1e-3;
  std::uint64_t seed = 1;
  int patience = 3;  // early stop on validation loss; <= 0 trains all epochs
};

struct Prediction {
  corpus::Sentiment sentiment = corpus::Sentiment::Positive;
  std::array<double, corpus::kNumSentiments> probs{};
};

struct NetworkCache {
  std::vector<neural::Conv1DCache> front_convs;
  neural::LstmCache lstm;
  std::vector<neural::Conv1DCache> back_convs;
  int pool_rows = 0, pool_cols = 0;
  std::vector<int> pool_argmax;
  neural::DenseCache hidden;
  neural::DenseCache output;
};

// One architecture instance with its parameters. Forward passes are const
// and reentrant; backward accumulates into the layer gradient buffers.
class Network {
 public:
  Network(const ArchitectureSpec& spec, int embedding_dim, int max_len);

  void init(util::Rng& rng);
  void zero_init();

  std::vector<double> forward(const neural::Tensor2D& input, NetworkCache& cache) const;
  void backward(const std::vector<double>& dlogits, const NetworkCache& cache);

  Prediction predict(const neural::Tensor2D& input) const;

  std::vector<neural::ParamView> params();
  void zero_grads();

  const ArchitectureSpec& spec() const { return spec_; }
  int embedding_dim() const { return embedding_dim_; }
  int max_len() const { return max_len_; }

  bool has_front_convs() const { return !front_.empty(); }
  bool has_lstm() const { return lstm_.has_value(); }
  bool has_back_convs() const { return !back_.empty(); }
  bool has_hidden() const { return hidden_.has_value(); }

 private:
  ArchitectureSpec spec_;
  int embedding_dim_, max_len_;
  std::vector<neural::Conv1D> front_;
  std::optional<neural::LstmLayer> lstm_;
  std::vector<neural::Conv1D> back_;
  std::optional<neural::Dense> hidden_;
  std::optional<neural::Dense> output_;  // always set; optional defers construction
};

struct EpochTrace {
  int epoch = 0;  // 1-based
  double train_loss = 0.0;
  double train_accuracy = 0.0;
  double val_loss = 0.0;  // NaN when no validation slice is in play
  double val_accuracy = 0.0;
};

struct TrainStats {
  std::vector<EpochTrace> trace;
  int best_epoch = 0;  // epoch whose weights were kept
};

// Initializes the network from cfg.seed and runs seeded mini-batch
// training. When patience > 0 a stratified slice (roughly a tenth of each
// class, only for classes with at least 4 examples) is held out; the
// weights from the best validation-loss epoch are restored at the end.
TrainStats train_network(Network& net, const std::vector<textprep::PostMatrix>& inputs,
                         const std::vector<corpus::Sentiment>& labels, const TrainConfig& cfg);

struct TrainedModel {
  Network net;
  TrainStats stats;
};

// End-to-end training from a labeled corpus: computes max_len from the
// corpus, vectorizes every labeled post, and trains. Every class must be
// present.
TrainedModel train_model(const corpus::Corpus& c, const textprep::StopwordSet& stopwords,
                         const embeddings::EmbeddingTable& table, const ArchitectureSpec& spec,
                         const TrainConfig& cfg, int max_len_ceiling = 150);

struct FoldResult {
  int fold = 0;
  metrics::ClassificationReport report;
  double kappa = 0.0;
};

struct CrossValidationReport {
  std::vector<FoldResult> folds;
  // Unweighted means over folds.
  double accuracy = 0.0, kappa = 0.0;
  double macro_precision = 0.0, macro_recall = 0.0, macro_f1 = 0.0;
};

// Stratified k-fold evaluation; fold f trains on the other k-1 folds with
// the seed mixed per fold and tests on fold f. max_len is recomputed from
// each fold's training split. threads caps concurrent fold training.
CrossValidationReport cross_validate(const corpus::Corpus& c, const textprep::StopwordSet& stopwords,
                                     const embeddings::EmbeddingTable& table,
                                     const ArchitectureSpec& spec, const TrainConfig& cfg,
                                     int k = 5, int threads = 1, int max_len_ceiling = 150);

// Model file: magic MFM1, version, architecture + dims, then length-prefixed
// 64-bit-float parameter blocks in a fixed layer order.
void save_model(Network& net, const std::string& path);
Network load_model(const std::string& path,
                   const std::optional<ArchitectureSpec>& expected = std::nullopt);

}  // namespace medforum::classifier
