#include "medforum/classifier.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>
#include <thread>

#include "medforum/binio.hpp"

namespace medforum::classifier {

namespace {

constexpr char kModelMagic[4] = {'M', 'F', 'M', '1'};
constexpr std::uint32_t kModelVersion = 1;

int argmax3(const std::array<double, corpus::kNumSentiments>& v) {
  int best = 0;
  for (int i = 1; i < corpus::kNumSentiments; ++i)
    if (v[i] > v[best]) best = i;
  return best;
}

int argmax(const std::vector<double>& v) {
  int best = 0;
  for (int i = 1; i < static_cast<int>(v.size()); ++i)
    if (v[i] > v[best]) best = i;
  return best;
}

neural::Tensor2D concat_channels(const std::vector<neural::Tensor2D>& parts) {
  int cols = 0;
  for (const auto& p : parts) cols += p.cols;
  neural::Tensor2D out(parts.front().rows, cols);
  int at = 0;
  for (const auto& p : parts) {
    for (int r = 0; r < p.rows; ++r)
      for (int c = 0; c < p.cols; ++c) out(r, at + c) = p(r, c);
    at += p.cols;
  }
  return out;
}

neural::Tensor2D slice_channels(const neural::Tensor2D& t, int begin, int count) {
  neural::Tensor2D out(t.rows, count);
  for (int r = 0; r < t.rows; ++r)
    for (int c = 0; c < count; ++c) out(r, c) = t(r, begin + c);
  return out;
}

neural::Tensor2D conv_block_forward(const std::vector<neural::Conv1D>& block,
                                    const neural::Tensor2D& input,
                                    std::vector<neural::Conv1DCache>& caches) {
  caches.resize(block.size());
  std::vector<neural::Tensor2D> parts;
  parts.reserve(block.size());
  for (std::size_t i = 0; i < block.size(); ++i)
    parts.push_back(block[i].forward(input, caches[i]));
  return concat_channels(parts);
}

neural::Tensor2D conv_block_backward(std::vector<neural::Conv1D>& block,
                                     const neural::Tensor2D& dout,
                                     const std::vector<neural::Conv1DCache>& caches) {
  neural::Tensor2D dx;
  int col = 0;
  for (std::size_t i = 0; i < block.size(); ++i) {
    const int f = block[i].filters();
    neural::Tensor2D dxi = block[i].backward(slice_channels(dout, col, f), caches[i]);
    col += f;
    if (i == 0) {
      dx = std::move(dxi);
    } else {
      for (std::size_t j = 0; j < dx.v.size(); ++j) dx.v[j] += dxi.v[j];
    }
  }
  return dx;
}

}  // namespace

std::string to_string(ArchKind k) {
  switch (k) {
    case ArchKind::CnnBaseline: return "cnn-baseline";
    case ArchKind::Lstm: return "lstm";
    case ArchKind::CnnLstm: return "cnn-lstm";
    case ArchKind::CnnLstmCnn: return "cnn-lstm-cnn";
  }
  throw DataError("invalid architecture kind value");
}

ArchKind parse_arch_kind(const std::string& s) {
  if (s == "cnn-baseline") return ArchKind::CnnBaseline;
  if (s == "lstm") return ArchKind::Lstm;
  if (s == "cnn-lstm") return ArchKind::CnnLstm;
  if (s == "cnn-lstm-cnn") return ArchKind::CnnLstmCnn;
  throw DataError("unknown architecture: " + s +
                  " (expected cnn-baseline, lstm, cnn-lstm or cnn-lstm-cnn)");
}

Network::Network(const ArchitectureSpec& spec, int embedding_dim, int max_len)
    : spec_(spec), embedding_dim_(embedding_dim), max_len_(max_len) {
  if (spec.num_classes != corpus::kNumSentiments)
    throw DataError("architecture must have exactly " +
                    std::to_string(corpus::kNumSentiments) + " output classes");
  if (spec.filters < 1) throw DataError("filters must be positive");
  if (embedding_dim < 1 || max_len < 1)
    throw DataError("embedding dim and max_len must be positive");

  const bool front = spec.kind != ArchKind::Lstm;
  const bool lstm = spec.kind != ArchKind::CnnBaseline;
  const bool back = spec.kind == ArchKind::CnnLstmCnn;
  const bool hidden = spec.kind == ArchKind::CnnLstm || spec.kind == ArchKind::CnnLstmCnn;

  if (front && spec.filter_sizes.empty())
    throw DataError("architecture needs at least one filter size");
  for (int fs : spec.filter_sizes)
    if (fs < 1) throw DataError("filter sizes must be positive");
  if (lstm && spec.lstm_hidden < 1) throw DataError("lstm hidden size must be positive");
  if (hidden && spec.dense_hidden < 1) throw DataError("dense hidden size must be positive");

  int channels = embedding_dim;
  if (front) {
    for (int fs : spec.filter_sizes)
      front_.emplace_back(fs, channels, spec.filters, neural::Activation::Relu);
    channels = spec.filters * static_cast<int>(spec.filter_sizes.size());
  }
  if (lstm) {
    lstm_.emplace(channels, spec.lstm_hidden);
    channels = spec.lstm_hidden;
  }
  if (back) {
    for (int fs : spec.filter_sizes)
      back_.emplace_back(fs, channels, spec.filters, neural::Activation::Relu);
    channels = spec.filters * static_cast<int>(spec.filter_sizes.size());
  }
  if (hidden) {
    hidden_.emplace(channels, spec.dense_hidden, neural::Activation::Relu);
    channels = spec.dense_hidden;
  }
  output_.emplace(channels, spec.num_classes, neural::Activation::None);
}

void Network::init(util::Rng& rng) {
  for (auto& c : front_) c.init(rng);
  if (lstm_) lstm_->init(rng);
  for (auto& c : back_) c.init(rng);
  if (hidden_) hidden_->init(rng);
  output_->init(rng);
}

void Network::zero_init() {
  for (auto& c : front_) c.zero_init();
  if (lstm_) lstm_->zero_init();
  for (auto& c : back_) c.zero_init();
  if (hidden_) hidden_->zero_init();
  output_->zero_init();
}

std::vector<double> Network::forward(const neural::Tensor2D& input, NetworkCache& cache) const {
  if (input.rows != max_len_ || input.cols != embedding_dim_)
    throw DataError("input matrix is " + std::to_string(input.rows) + "x" +
                    std::to_string(input.cols) + ", model expects " +
                    std::to_string(max_len_) + "x" + std::to_string(embedding_dim_));
  neural::Tensor2D staged;
  const neural::Tensor2D* x = &input;
  if (!front_.empty()) {
    staged = conv_block_forward(front_, *x, cache.front_convs);
    x = &staged;
  }
  if (lstm_) {
    staged = lstm_->forward(*x, cache.lstm);
    x = &staged;
  }
  if (!back_.empty()) {
    staged = conv_block_forward(back_, *x, cache.back_convs);
    x = &staged;
  }
  cache.pool_rows = x->rows;
  cache.pool_cols = x->cols;
  std::vector<double> vec = neural::maxpool_time(*x, cache.pool_argmax);
  if (hidden_) vec = hidden_->forward(vec, cache.hidden);
  return output_->forward(vec, cache.output);
}

void Network::backward(const std::vector<double>& dlogits, const NetworkCache& cache) {
  std::vector<double> dvec = output_->backward(dlogits, cache.output);
  if (hidden_) dvec = hidden_->backward(dvec, cache.hidden);
  neural::Tensor2D dx =
      neural::maxpool_time_backward(dvec, cache.pool_argmax, cache.pool_rows, cache.pool_cols);
  if (!back_.empty()) dx = conv_block_backward(back_, dx, cache.back_convs);
  if (lstm_) dx = lstm_->backward(dx, cache.lstm);
  if (!front_.empty()) conv_block_backward(front_, dx, cache.front_convs);
}

Prediction Network::predict(const neural::Tensor2D& input) const {
  NetworkCache cache;
  const std::vector<double> logits = forward(input, cache);
  Prediction p;
  const double mx = *std::max_element(logits.begin(), logits.end());
  double z = 0.0;
  for (int i = 0; i < corpus::kNumSentiments; ++i) {
    p.probs[i] = std::exp(logits[i] - mx);
    z += p.probs[i];
  }
  for (double& v : p.probs) v /= z;
  p.sentiment = static_cast<corpus::Sentiment>(argmax3(p.probs));
  return p;
}

std::vector<neural::ParamView> Network::params() {
  std::vector<neural::ParamView> out;
  auto append = [&out](std::vector<neural::ParamView> views) {
    for (auto& v : views) out.push_back(std::move(v));
  };
  for (std::size_t i = 0; i < front_.size(); ++i)
    append(front_[i].params("conv1." + std::to_string(i)));
  if (lstm_) append(lstm_->params("lstm"));
  for (std::size_t i = 0; i < back_.size(); ++i)
    append(back_[i].params("conv2." + std::to_string(i)));
  if (hidden_) append(hidden_->params("hidden"));
  append(output_->params("out"));
  return out;
}

void Network::zero_grads() {
  for (auto& c : front_) c.zero_grads();
  if (lstm_) lstm_->zero_grads();
  for (auto& c : back_) c.zero_grads();
  if (hidden_) hidden_->zero_grads();
  output_->zero_grads();
}

TrainStats train_network(Network& net, const std::vector<textprep::PostMatrix>& inputs,
                         const std::vector<corpus::Sentiment>& labels, const TrainConfig& cfg) {
  if (inputs.size() != labels.size())
    throw DataError("training inputs and labels differ in length");
  if (inputs.empty()) throw DataError("training set is empty");
  if (cfg.batch_size < 1) throw DataError("batch size must be >= 1");
  if (cfg.epochs < 1) throw DataError("epochs must be >= 1");

  util::Rng rng(cfg.seed);
  net.init(rng);

  std::vector<std::size_t> train_idx, val_idx;
  if (cfg.patience > 0) {
    std::array<std::vector<std::size_t>, corpus::kNumSentiments> by_class;
    for (std::size_t i = 0; i < labels.size(); ++i)
      by_class[static_cast<int>(labels[i])].push_back(i);
    for (auto& cls : by_class) {
      if (cls.size() >= 4) {
        rng.shuffle(cls);
        const std::size_t take = std::max<std::size_t>(cls.size() / 10, 1);
        for (std::size_t i = 0; i < cls.size(); ++i)
          (i < take ? val_idx : train_idx).push_back(cls[i]);
      } else {
        for (std::size_t i : cls) train_idx.push_back(i);
      }
    }
    std::sort(train_idx.begin(), train_idx.end());
    std::sort(val_idx.begin(), val_idx.end());
  } else {
    train_idx.resize(inputs.size());
    for (std::size_t i = 0; i < inputs.size(); ++i) train_idx[i] = i;
  }
  const bool use_val = cfg.patience > 0 && !val_idx.empty();

  std::vector<neural::ParamView> params = net.params();
  neural::Adam opt(neural::AdamConfig{.learning_rate = cfg.learning_rate});

  auto snapshot_params = [&params]() {
    std::vector<std::vector<double>> snap(params.size());
    for (std::size_t i = 0; i < params.size(); ++i)
      snap[i].assign(params[i].value, params[i].value + params[i].size);
    return snap;
  };
  auto restore_params = [&params](const std::vector<std::vector<double>>& snap) {
    for (std::size_t i = 0; i < params.size(); ++i)
      std::copy(snap[i].begin(), snap[i].end(), params[i].value);
  };

  auto evaluate = [&](const std::vector<std::size_t>& idx, double& loss, double& acc) {
    loss = 0.0;
    std::size_t correct = 0;
    NetworkCache cache;
    for (std::size_t i : idx) {
      const auto logits = net.forward(inputs[i].values, cache);
      const auto res = neural::softmax_cross_entropy(logits, static_cast<int>(labels[i]));
      loss += res.loss;
      if (argmax(res.probs) == static_cast<int>(labels[i])) ++correct;
    }
    loss /= static_cast<double>(idx.size());
    acc = static_cast<double>(correct) / static_cast<double>(idx.size());
  };

  TrainStats stats;
  double best_val = std::numeric_limits<double>::infinity();
  int best_epoch = 0, bad_epochs = 0;
  std::vector<std::vector<double>> best_snapshot;

  std::vector<std::size_t> order = train_idx;
  NetworkCache cache;
  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    rng.shuffle(order);
    double epoch_loss = 0.0;
    std::size_t correct = 0;
    for (std::size_t start = 0; start < order.size();
         start += static_cast<std::size_t>(cfg.batch_size)) {
      const std::size_t end =
          std::min(order.size(), start + static_cast<std::size_t>(cfg.batch_size));
      const double scale = 1.0 / static_cast<double>(end - start);
      net.zero_grads();
      for (std::size_t i = start; i < end; ++i) {
        const std::size_t s = order[i];
        const auto logits = net.forward(inputs[s].values, cache);
        auto res = neural::softmax_cross_entropy(logits, static_cast<int>(labels[s]));
        epoch_loss += res.loss;
        if (argmax(res.probs) == static_cast<int>(labels[s])) ++correct;
        for (double& g : res.dlogits) g *= scale;
        net.backward(res.dlogits, cache);
      }
      opt.step(params);
    }

    EpochTrace tr;
    tr.epoch = epoch;
    tr.train_loss = epoch_loss / static_cast<double>(order.size());
    tr.train_accuracy = static_cast<double>(correct) / static_cast<double>(order.size());
    if (use_val) {
      evaluate(val_idx, tr.val_loss, tr.val_accuracy);
      if (tr.val_loss < best_val) {
        best_val = tr.val_loss;
        best_epoch = epoch;
        bad_epochs = 0;
        best_snapshot = snapshot_params();
      } else {
        ++bad_epochs;
      }
    } else {
      tr.val_loss = std::numeric_limits<double>::quiet_NaN();
      tr.val_accuracy = std::numeric_limits<double>::quiet_NaN();
    }
    stats.trace.push_back(tr);
    if (use_val && bad_epochs >= cfg.patience) break;
  }

  if (use_val && best_epoch > 0) {
    restore_params(best_snapshot);
    stats.best_epoch = best_epoch;
  } else {
    stats.best_epoch = static_cast<int>(stats.trace.size());
  }
  return stats;
}

TrainedModel train_model(const corpus::Corpus& c, const textprep::StopwordSet& stopwords,
                         const embeddings::EmbeddingTable& table, const ArchitectureSpec& spec,
                         const TrainConfig& cfg, int max_len_ceiling) {
  std::vector<const corpus::ForumPost*> labeled;
  std::array<std::size_t, corpus::kNumSentiments> hist{};
  for (const auto& post : c.posts) {
    if (!post.sentiment) continue;
    labeled.push_back(&post);
    ++hist[static_cast<int>(*post.sentiment)];
  }
  for (int cls = 0; cls < corpus::kNumSentiments; ++cls)
    if (hist[cls] == 0)
      throw DataError(std::string("no labeled posts for class ") +
                      corpus::to_string(static_cast<corpus::Sentiment>(cls)));

  const int max_len = textprep::compute_max_len(labeled, stopwords, table, max_len_ceiling);
  std::vector<textprep::PostMatrix> inputs;
  std::vector<corpus::Sentiment> labels;
  inputs.reserve(labeled.size());
  labels.reserve(labeled.size());
  for (const auto* post : labeled) {
    inputs.push_back(textprep::vectorize(textprep::preprocess(post->text, stopwords), table, max_len));
    labels.push_back(*post->sentiment);
  }

  TrainedModel out{Network(spec, table.dim(), max_len), {}};
  out.stats = train_network(out.net, inputs, labels, cfg);
  return out;
}

CrossValidationReport cross_validate(const corpus::Corpus& c, const textprep::StopwordSet& stopwords,
                                     const embeddings::EmbeddingTable& table,
                                     const ArchitectureSpec& spec, const TrainConfig& cfg,
                                     int k, int threads, int max_len_ceiling) {
  const corpus::FoldSplit split = corpus::stratified_kfold(c, k, cfg.seed);
  if (threads < 1) threads = 1;

  std::vector<FoldResult> results(static_cast<std::size_t>(k));
  std::vector<std::string> errors(static_cast<std::size_t>(k));

  auto run_fold = [&](int fold) {
    try {
      std::vector<const corpus::ForumPost*> train_posts, test_posts;
      for (const auto& post : c.posts) {
        if (!post.sentiment) continue;
        const auto it = split.assignments.find(post.id);
        if (it == split.assignments.end()) continue;
        (it->second == fold ? test_posts : train_posts).push_back(&post);
      }
      const int max_len = textprep::compute_max_len(train_posts, stopwords, table, max_len_ceiling);

      std::vector<textprep::PostMatrix> inputs;
      std::vector<corpus::Sentiment> labels;
      for (const auto* post : train_posts) {
        inputs.push_back(
            textprep::vectorize(textprep::preprocess(post->text, stopwords), table, max_len));
        labels.push_back(*post->sentiment);
      }

      Network net(spec, table.dim(), max_len);
      TrainConfig fold_cfg = cfg;
      fold_cfg.seed = util::mix_seed(cfg.seed, static_cast<std::uint64_t>(fold));
      train_network(net, inputs, labels, fold_cfg);

      std::vector<int> gold, pred;
      for (const auto* post : test_posts) {
        const auto pm =
            textprep::vectorize(textprep::preprocess(post->text, stopwords), table, max_len);
        gold.push_back(static_cast<int>(*post->sentiment));
        pred.push_back(static_cast<int>(net.predict(pm.values).sentiment));
      }

      FoldResult fr;
      fr.fold = fold;
      fr.report = metrics::classification_report(gold, pred);
      fr.kappa = metrics::cohen_kappa(gold, pred);
      results[static_cast<std::size_t>(fold)] = std::move(fr);
    } catch (const std::exception& e) {
      errors[static_cast<std::size_t>(fold)] = e.what();
    }
  };

  if (threads == 1) {
    for (int fold = 0; fold < k; ++fold) run_fold(fold);
  } else {
    for (int base = 0; base < k; base += threads) {
      std::vector<std::thread> pool;
      for (int fold = base; fold < std::min(k, base + threads); ++fold)
        pool.emplace_back(run_fold, fold);
      for (auto& t : pool) t.join();
    }
  }

  for (const auto& e : errors)
    if (!e.empty()) throw DataError("fold evaluation failed: " + e);

  CrossValidationReport rep;
  rep.folds = std::move(results);
  for (const auto& fr : rep.folds) {
    rep.accuracy += fr.report.accuracy;
    rep.kappa += fr.kappa;
    rep.macro_precision += fr.report.macro_precision;
    rep.macro_recall += fr.report.macro_recall;
    rep.macro_f1 += fr.report.macro_f1;
  }
  rep.accuracy /= k;
  rep.kappa /= k;
  rep.macro_precision /= k;
  rep.macro_recall /= k;
  rep.macro_f1 /= k;
  return rep;
}

void save_model(Network& net, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot open model file for writing: " + path);
  out.write(kModelMagic, 4);
  binio::write_u32(out, kModelVersion);
  const ArchitectureSpec& spec = net.spec();
  binio::write_u8(out, static_cast<std::uint8_t>(spec.kind));
  binio::write_u32(out, static_cast<std::uint32_t>(spec.filter_sizes.size()));
  for (int fs : spec.filter_sizes) binio::write_u32(out, static_cast<std::uint32_t>(fs));
  binio::write_u32(out, static_cast<std::uint32_t>(spec.filters));
  binio::write_u32(out, static_cast<std::uint32_t>(spec.lstm_hidden));
  binio::write_u32(out, static_cast<std::uint32_t>(spec.dense_hidden));
  binio::write_u32(out, static_cast<std::uint32_t>(spec.num_classes));
  binio::write_u32(out, static_cast<std::uint32_t>(net.embedding_dim()));
  binio::write_u32(out, static_cast<std::uint32_t>(net.max_len()));

  const auto params = net.params();
  binio::write_u32(out, static_cast<std::uint32_t>(params.size()));
  for (const auto& p : params) {
    binio::write_u64(out, p.size);
    for (std::size_t i = 0; i < p.size; ++i) binio::write_f64(out, p.value[i]);
  }
  if (!out) throw DataError("failed writing model file: " + path);
}

Network load_model(const std::string& path, const std::optional<ArchitectureSpec>& expected) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open model file: " + path);
  char magic[4];
  if (!in.read(magic, 4) || std::memcmp(magic, kModelMagic, 4) != 0)
    throw DataError("not a model file (bad magic): " + path);
  const std::uint32_t version = binio::read_u32(in, "model version");
  if (version != kModelVersion)
    throw DataError("unsupported model version " + std::to_string(version));

  ArchitectureSpec spec;
  const std::uint8_t kind = binio::read_u8(in, "architecture kind");
  if (kind > static_cast<std::uint8_t>(ArchKind::CnnLstmCnn))
    throw DataError("model file has invalid architecture kind");
  spec.kind = static_cast<ArchKind>(kind);
  const std::uint32_t n_sizes = binio::read_u32(in, "filter size count");
  if (n_sizes > 16) throw DataError("model file has implausible filter size count");
  spec.filter_sizes.clear();
  for (std::uint32_t i = 0; i < n_sizes; ++i)
    spec.filter_sizes.push_back(static_cast<int>(binio::read_u32(in, "filter size")));
  spec.filters = static_cast<int>(binio::read_u32(in, "filter count"));
  spec.lstm_hidden = static_cast<int>(binio::read_u32(in, "lstm hidden size"));
  spec.dense_hidden = static_cast<int>(binio::read_u32(in, "dense hidden size"));
  spec.num_classes = static_cast<int>(binio::read_u32(in, "class count"));
  const int embedding_dim = static_cast<int>(binio::read_u32(in, "embedding dim"));
  const int max_len = static_cast<int>(binio::read_u32(in, "max_len"));

  if (expected && !(*expected == spec))
    throw DataError("model file architecture does not match the requested architecture");

  Network net(spec, embedding_dim, max_len);
  auto params = net.params();
  const std::uint32_t blocks = binio::read_u32(in, "parameter block count");
  if (blocks != params.size())
    throw DataError("model file has " + std::to_string(blocks) +
                    " parameter blocks, architecture needs " + std::to_string(params.size()));
  for (auto& p : params) {
    const std::uint64_t n = binio::read_u64(in, "parameter block size");
    if (n != p.size)
      throw DataError("parameter block " + p.name + " has " + std::to_string(n) +
                      " values, expected " + std::to_string(p.size));
    for (std::size_t i = 0; i < p.size; ++i) p.value[i] = binio::read_f64(in, "parameter value");
  }
  char trailing;
  if (in.read(&trailing, 1))
    throw DataError("model file has trailing bytes: " + path);
  return net;
}

}  // namespace medforum::classifier
