// Command-line front end for the forum sentiment/retrieval pipeline.
// Exit codes: 0 success, 1 usage error, 2 data/processing error.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "medforum/classifier.hpp"
#include "medforum/concepts.hpp"
#include "medforum/corpus.hpp"
#include "medforum/embeddings.hpp"
#include "medforum/metrics.hpp"
#include "medforum/retrieval.hpp"
#include "medforum/suggestion.hpp"
#include "medforum/textprep.hpp"
#include "medforum/util.hpp"

using json = nlohmann::json;
using namespace medforum;

namespace {

std::string fmt(double v, int digits = 6) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.*f", digits, v);
  return buf;
}

void require_file(const std::string& path, const char* what) {
  std::ifstream f(path);
  if (!f) throw DataError(std::string("cannot open ") + what + ": " + path);
}

// Applies values from a JSON config file to options the user did not set on
// the command line (explicit flags always win).
class ConfigMerger {
 public:
  ConfigMerger(CLI::App* sub, const std::string& path) : sub_(sub) {
    if (path.empty()) return;
    std::ifstream in(path);
    if (!in) throw DataError("cannot open config file: " + path);
    try {
      cfg_ = json::parse(in);
    } catch (const json::exception& e) {
      throw DataError("config file " + path + ": " + e.what());
    }
    if (!cfg_.is_object()) throw DataError("config file must hold a JSON object: " + path);
  }

  template <typename T>
  void merge(const std::string& key, T& target) {
    if (!cfg_.is_object() || !cfg_.contains(key)) return;
    if (sub_->get_option("--" + key)->count() > 0) return;
    try {
      cfg_.at(key).get_to(target);
    } catch (const json::exception& e) {
      throw DataError("config key \"" + key + "\": " + e.what());
    }
  }

 private:
  CLI::App* sub_;
  json cfg_;
};

corpus::Corpus load_corpus_any(const std::string& path) {
  require_file(path, "corpus file");
  {
    std::ifstream probe(path, std::ios::binary);
    char magic[4] = {};
    probe.read(magic, 4);
    if (probe.gcount() == 4 && std::string_view(magic, 4) == "MFR1")
      return corpus::load_store(path);
  }
  return corpus::ingest(path);
}

json histogram_json(const corpus::Corpus& c) {
  json h = json::object();
  for (int s = 0; s < corpus::kNumSentiments; ++s)
    h[corpus::to_string(static_cast<corpus::Sentiment>(s))] = c.class_histogram[s];
  return h;
}

json set_json(const std::set<std::string>& s) {
  json arr = json::array();
  for (const auto& v : s) arr.push_back(v);
  return arr;
}

struct PreparedInputs {
  corpus::Corpus corpus_data;
  textprep::StopwordSet stopwords;
  embeddings::EmbeddingTable table;
  concepts::ConceptLexicon lexicon;
  retrieval::PreparedCorpus prepared;
};

// Common load path for retrieve/suggest/evaluate-retrieval. When a model is
// given, unlabeled posts get predicted sentiments before preparation.
PreparedInputs load_pipeline(const std::string& corpus_path, const std::string& stopwords_path,
                             const std::string& embeddings_path, const std::string& lexicon_path,
                             const std::string& model_path, int threads) {
  require_file(stopwords_path, "stopword file");
  require_file(embeddings_path, "embedding file");
  require_file(lexicon_path, "lexicon file");
  if (!model_path.empty()) require_file(model_path, "model file");

  PreparedInputs in;
  in.corpus_data = load_corpus_any(corpus_path);
  in.stopwords = textprep::load_stopwords(stopwords_path);
  in.table = embeddings::load_embeddings(embeddings_path);
  in.lexicon = concepts::load_lexicon(lexicon_path, in.stopwords);

  if (!model_path.empty()) {
    classifier::Network net = classifier::load_model(model_path);
    if (net.embedding_dim() != in.table.dim())
      throw DataError("model embedding dim " + std::to_string(net.embedding_dim()) +
                      " does not match table dim " + std::to_string(in.table.dim()));
    for (auto& post : in.corpus_data.posts) {
      if (post.sentiment) continue;
      const auto pm = textprep::vectorize(textprep::preprocess(post.text, in.stopwords),
                                          in.table, net.max_len());
      post.sentiment = net.predict(pm.values).sentiment;
    }
    corpus::recompute_histogram(in.corpus_data);
  }

  in.prepared = retrieval::prepare(in.corpus_data, in.stopwords, in.lexicon, in.table, threads);
  return in;
}

retrieval::PreparedPost resolve_query(const PreparedInputs& in, const std::string& query_id,
                                      const std::string& query_text) {
  if (!query_id.empty()) {
    const retrieval::PreparedPost* p = in.prepared.find(query_id);
    if (!p) throw DataError("query post not found in corpus: " + query_id);
    return *p;
  }
  corpus::ForumPost ad_hoc;
  ad_hoc.id = "(query)";
  ad_hoc.text = query_text;
  return retrieval::prepare_post(ad_hoc, in.stopwords, in.lexicon, in.table);
}

// ----------------------------------------------------------------- ingest

int cmd_ingest(const std::string& input, const std::string& output, bool as_json) {
  const corpus::Corpus c = corpus::ingest(input);
  if (!output.empty()) corpus::save_store(c, output);
  if (as_json) {
    json j;
    j["posts"] = c.posts.size();
    j["labeled"] = c.labeled_count();
    j["histogram"] = histogram_json(c);
    if (!output.empty()) j["output"] = output;
    std::cout << j.dump(2) << "\n";
  } else {
    std::cout << "ingested " << c.posts.size() << " posts (" << c.labeled_count()
              << " labeled";
    for (int s = 0; s < corpus::kNumSentiments; ++s)
      std::cout << ", " << c.class_histogram[s] << " "
                << corpus::to_string(static_cast<corpus::Sentiment>(s));
    std::cout << ")\n";
    if (!output.empty()) std::cout << "wrote store: " << output << "\n";
  }
  return 0;
}

// ------------------------------------------------------- extract-concepts

int cmd_extract_concepts(const std::string& corpus_path, const std::string& stopwords_path,
                         const std::string& lexicon_path, const std::string& only_id,
                         bool as_json) {
  require_file(stopwords_path, "stopword file");
  require_file(lexicon_path, "lexicon file");
  const corpus::Corpus c = load_corpus_any(corpus_path);
  const textprep::StopwordSet sw = textprep::load_stopwords(stopwords_path);
  const concepts::ConceptLexicon lex = concepts::load_lexicon(lexicon_path, sw);

  json arr = json::array();
  bool found = false;
  for (const auto& post : c.posts) {
    if (!only_id.empty() && post.id != only_id) continue;
    found = true;
    const auto cs = lex.extract(textprep::preprocess(post.text, sw));
    if (as_json) {
      json j;
      j["id"] = post.id;
      j["diseases"] = set_json(cs.diseases);
      j["symptoms"] = set_json(cs.symptoms);
      j["treatments"] = set_json(cs.treatments);
      arr.push_back(std::move(j));
    } else {
      auto join = [](const std::set<std::string>& s) {
        std::string out;
        for (const auto& v : s) {
          if (!out.empty()) out += ",";
          out += v;
        }
        return out;
      };
      std::cout << post.id << "\tdiseases=[" << join(cs.diseases) << "]\tsymptoms=["
                << join(cs.symptoms) << "]\ttreatments=[" << join(cs.treatments) << "]\n";
    }
  }
  if (!only_id.empty() && !found)
    throw DataError("post not found in corpus: " + only_id);
  if (as_json) std::cout << arr.dump(2) << "\n";
  return 0;
}

// ------------------------------------------------------------------ train

int cmd_train(const std::string& corpus_path, const std::string& stopwords_path,
              const std::string& embeddings_path, const std::string& output,
              const classifier::ArchitectureSpec& spec, const classifier::TrainConfig& cfg,
              int max_len_ceiling, bool as_json) {
  require_file(stopwords_path, "stopword file");
  require_file(embeddings_path, "embedding file");
  const corpus::Corpus c = load_corpus_any(corpus_path);
  const textprep::StopwordSet sw = textprep::load_stopwords(stopwords_path);
  const embeddings::EmbeddingTable table = embeddings::load_embeddings(embeddings_path);

  classifier::TrainedModel tm = classifier::train_model(c, sw, table, spec, cfg, max_len_ceiling);
  if (!output.empty()) classifier::save_model(tm.net, output);

  if (as_json) {
    json j;
    j["architecture"] = classifier::to_string(spec.kind);
    j["max_len"] = tm.net.max_len();
    j["best_epoch"] = tm.stats.best_epoch;
    json trace = json::array();
    for (const auto& e : tm.stats.trace) {
      json je;
      je["epoch"] = e.epoch;
      je["train_loss"] = e.train_loss;
      je["train_accuracy"] = e.train_accuracy;
      if (!std::isnan(e.val_loss)) {
        je["val_loss"] = e.val_loss;
        je["val_accuracy"] = e.val_accuracy;
      }
      trace.push_back(std::move(je));
    }
    j["trace"] = std::move(trace);
    if (!output.empty()) j["output"] = output;
    std::cout << j.dump(2) << "\n";
  } else {
    for (const auto& e : tm.stats.trace) {
      std::cout << "epoch " << e.epoch << "  train_loss " << fmt(e.train_loss, 4)
                << "  train_acc " << fmt(e.train_accuracy, 3);
      if (!std::isnan(e.val_loss))
        std::cout << "  val_loss " << fmt(e.val_loss, 4) << "  val_acc "
                  << fmt(e.val_accuracy, 3);
      std::cout << "\n";
    }
    std::cout << "kept weights from epoch " << tm.stats.best_epoch << " (max_len "
              << tm.net.max_len() << ")\n";
    if (!output.empty()) std::cout << "wrote model: " << output << "\n";
  }
  return 0;
}

// --------------------------------------------------------------- classify

int cmd_classify(const std::string& model_path, const std::string& stopwords_path,
                 const std::string& embeddings_path, const std::string& text,
                 const std::string& corpus_path, const std::string& only_id, bool as_json) {
  require_file(model_path, "model file");
  require_file(stopwords_path, "stopword file");
  require_file(embeddings_path, "embedding file");
  const textprep::StopwordSet sw = textprep::load_stopwords(stopwords_path);
  const embeddings::EmbeddingTable table = embeddings::load_embeddings(embeddings_path);
  const classifier::Network net = classifier::load_model(model_path);
  if (net.embedding_dim() != table.dim())
    throw DataError("model embedding dim " + std::to_string(net.embedding_dim()) +
                    " does not match table dim " + std::to_string(table.dim()));

  auto classify_one = [&](const std::string& id, const std::string& body, json& arr) {
    const auto pm = textprep::vectorize(textprep::preprocess(body, sw), table, net.max_len());
    const classifier::Prediction p = net.predict(pm.values);
    if (as_json) {
      json j;
      j["id"] = id;
      j["sentiment"] = corpus::to_string(p.sentiment);
      j["probabilities"] = {p.probs[0], p.probs[1], p.probs[2]};
      arr.push_back(std::move(j));
    } else {
      std::cout << id << "\t" << corpus::to_string(p.sentiment) << "\tp=[" << fmt(p.probs[0], 4)
                << ", " << fmt(p.probs[1], 4) << ", " << fmt(p.probs[2], 4) << "]\n";
    }
  };

  json arr = json::array();
  if (!corpus_path.empty()) {
    const corpus::Corpus c = load_corpus_any(corpus_path);
    bool found = false;
    for (const auto& post : c.posts) {
      if (!only_id.empty() && post.id != only_id) continue;
      found = true;
      classify_one(post.id, post.text, arr);
    }
    if (!only_id.empty() && !found) throw DataError("post not found in corpus: " + only_id);
  } else {
    classify_one("-", text, arr);
  }
  if (as_json) std::cout << arr.dump(2) << "\n";
  return 0;
}

// --------------------------------------------------------------- retrieve

int cmd_retrieve(const std::string& corpus_path, const std::string& stopwords_path,
                 const std::string& embeddings_path, const std::string& lexicon_path,
                 const std::string& query_id, const std::string& query_text, int top,
                 retrieval::Mode mode, int threads, bool as_json) {
  const PreparedInputs in = load_pipeline(corpus_path, stopwords_path, embeddings_path,
                                          lexicon_path, "", threads);
  const retrieval::PreparedPost query = resolve_query(in, query_id, query_text);
  const retrieval::RetrievalResult res = retrieval::top_n(query, in.prepared, top, mode, threads);

  if (as_json) {
    json j;
    j["query_id"] = res.query_id;
    j["mode"] = retrieval::to_string(res.mode);
    j["n"] = res.n;
    json rows = json::array();
    for (std::size_t i = 0; i < res.ranked.size(); ++i) {
      const auto& r = res.ranked[i];
      json row;
      row["rank"] = i + 1;
      row["post_id"] = r.post_id;
      row["ds"] = r.breakdown.ds;
      row["ss"] = r.breakdown.ss;
      row["ts"] = r.breakdown.ts;
      row["misim"] = r.breakdown.misim;
      row["sim"] = r.breakdown.sim;
      rows.push_back(std::move(row));
    }
    j["results"] = std::move(rows);
    std::cout << j.dump(2) << "\n";
  } else {
    std::cout << "rank\tpost_id\tds\tss\tts\tmisim\tsim\n";
    for (std::size_t i = 0; i < res.ranked.size(); ++i) {
      const auto& r = res.ranked[i];
      std::cout << (i + 1) << "\t" << r.post_id << "\t" << fmt(r.breakdown.ds, 4) << "\t"
                << fmt(r.breakdown.ss, 4) << "\t" << fmt(r.breakdown.ts, 4) << "\t"
                << fmt(r.breakdown.misim, 4) << "\t" << fmt(r.breakdown.sim, 4) << "\n";
    }
  }
  return 0;
}

// ---------------------------------------------------------------- suggest

int cmd_suggest(const std::string& corpus_path, const std::string& stopwords_path,
                const std::string& embeddings_path, const std::string& lexicon_path,
                const std::string& model_path, const std::string& query_id,
                const std::string& query_text, const suggestion::SuggestionConfig& cfg,
                int threads, bool as_json) {
  const PreparedInputs in = load_pipeline(corpus_path, stopwords_path, embeddings_path,
                                          lexicon_path, model_path, threads);
  const retrieval::PreparedPost query = resolve_query(in, query_id, query_text);
  const suggestion::PairStats stats = suggestion::build_pair_stats(in.prepared);
  const suggestion::SuggestionResult res = suggestion::suggest(query, in.prepared, stats, cfg);

  if (as_json) {
    json j;
    j["query_id"] = res.query_id;
    j["tau"] = cfg.tau;
    j["alpha"] = cfg.alpha;
    json rows = json::array();
    for (const auto& s : res.items) {
      json row;
      row["disease"] = s.disease;
      row["treatment"] = s.treatment;
      row["evidence_post_id"] = s.evidence_post_id;
      row["sim"] = s.sim;
      row["pr"] = s.pr;
      row["g"] = s.g;
      rows.push_back(std::move(row));
    }
    j["suggestions"] = std::move(rows);
    std::cout << j.dump(2) << "\n";
  } else {
    if (res.items.empty()) {
      std::cout << "no suggestions clear tau=" << fmt(cfg.tau, 3) << "\n";
    } else {
      std::cout << "disease\ttreatment\tevidence\tsim\tpr\tg\n";
      for (const auto& s : res.items)
        std::cout << s.disease << "\t" << s.treatment << "\t" << s.evidence_post_id << "\t"
                  << fmt(s.sim, 4) << "\t" << fmt(s.pr, 4) << "\t" << fmt(s.g, 4) << "\n";
    }
  }
  return 0;
}

// --------------------------------------------------------------- evaluate

json confusion_json(const metrics::ConfusionMatrix& m) {
  json rows = json::array();
  for (int g = 0; g < metrics::kNumClasses; ++g) {
    json row = json::array();
    for (int p = 0; p < metrics::kNumClasses; ++p) row.push_back(m.counts[g][p]);
    rows.push_back(std::move(row));
  }
  return rows;
}

int cmd_evaluate_classification(const std::string& corpus_path, const std::string& stopwords_path,
                                const std::string& embeddings_path,
                                const classifier::ArchitectureSpec& spec,
                                const classifier::TrainConfig& cfg, int folds, int threads,
                                int max_len_ceiling, bool as_json) {
  require_file(stopwords_path, "stopword file");
  require_file(embeddings_path, "embedding file");
  const corpus::Corpus c = load_corpus_any(corpus_path);
  const textprep::StopwordSet sw = textprep::load_stopwords(stopwords_path);
  const embeddings::EmbeddingTable table = embeddings::load_embeddings(embeddings_path);

  const classifier::CrossValidationReport rep =
      classifier::cross_validate(c, sw, table, spec, cfg, folds, threads, max_len_ceiling);

  if (as_json) {
    json j;
    j["architecture"] = classifier::to_string(spec.kind);
    j["folds"] = json::array();
    for (const auto& f : rep.folds) {
      json jf;
      jf["fold"] = f.fold;
      jf["accuracy"] = f.report.accuracy;
      jf["kappa"] = f.kappa;
      jf["macro_precision"] = f.report.macro_precision;
      jf["macro_recall"] = f.report.macro_recall;
      jf["macro_f1"] = f.report.macro_f1;
      jf["confusion"] = confusion_json(f.report.confusion);
      j["folds"].push_back(std::move(jf));
    }
    j["aggregate"] = {{"accuracy", rep.accuracy},
                      {"kappa", rep.kappa},
                      {"macro_precision", rep.macro_precision},
                      {"macro_recall", rep.macro_recall},
                      {"macro_f1", rep.macro_f1}};
    std::cout << j.dump(2) << "\n";
  } else {
    std::cout << "fold\taccuracy\tkappa\tmacro_p\tmacro_r\tmacro_f1\n";
    for (const auto& f : rep.folds)
      std::cout << f.fold << "\t" << fmt(f.report.accuracy, 4) << "\t" << fmt(f.kappa, 4) << "\t"
                << fmt(f.report.macro_precision, 4) << "\t" << fmt(f.report.macro_recall, 4)
                << "\t" << fmt(f.report.macro_f1, 4) << "\n";
    std::cout << "mean\t" << fmt(rep.accuracy, 4) << "\t" << fmt(rep.kappa, 4) << "\t"
              << fmt(rep.macro_precision, 4) << "\t" << fmt(rep.macro_recall, 4) << "\t"
              << fmt(rep.macro_f1, 4) << "\n";
  }
  return 0;
}

int cmd_evaluate_retrieval(const std::string& corpus_path, const std::string& stopwords_path,
                           const std::string& embeddings_path, const std::string& lexicon_path,
                           const std::string& judgments_path, int k, retrieval::Mode mode,
                           double relevance_threshold, metrics::AgreementLevel agreement,
                           int threads, bool as_json) {
  require_file(judgments_path, "judgment file");
  const PreparedInputs in = load_pipeline(corpus_path, stopwords_path, embeddings_path,
                                          lexicon_path, "", threads);
  const std::vector<metrics::RelevanceJudgment> all = metrics::load_judgments(judgments_path);
  if (all.empty()) throw DataError("judgment file has no judgments: " + judgments_path);

  std::map<std::string, std::vector<metrics::RelevanceJudgment>> by_query;
  for (const auto& j : all) by_query[j.query_id].push_back(j);

  json queries = json::array();
  std::vector<double> pooled_sims, pooled_ratings;
  double sum_prec = 0.0, sum_dcg = 0.0;
  int n_prec = 0;

  if (!as_json) std::cout << "query\tpearson_r\tpearson_p\tprecision@" << k << "\tdcg@" << k << "\n";

  for (const auto& [qid, judgments] : by_query) {
    const retrieval::PreparedPost* query = in.prepared.find(qid);
    if (!query) throw DataError("judged query post not found in corpus: " + qid);
    const retrieval::RetrievalResult ranked = retrieval::top_n(
        *query, in.prepared, static_cast<int>(in.prepared.posts.size()), mode, threads);
    const std::map<std::string, double> medians = metrics::median_ratings(judgments);

    // Correlation between similarity and human rating over judged items.
    std::vector<double> sims, ratings;
    for (const auto& r : ranked.ranked) {
      const auto it = medians.find(r.post_id);
      if (it == medians.end()) continue;
      sims.push_back(mode == retrieval::Mode::Full ? r.breakdown.sim : r.breakdown.ts);
      ratings.push_back(it->second);
    }
    pooled_sims.insert(pooled_sims.end(), sims.begin(), sims.end());
    pooled_ratings.insert(pooled_ratings.end(), ratings.begin(), ratings.end());

    std::optional<metrics::Correlation> corr;
    if (sims.size() >= 3) {
      try {
        corr = metrics::pearson_with_p(sims, ratings);
      } catch (const DataError&) {
        corr.reset();  // zero variance: correlation undefined for this query
      }
    }

    std::vector<std::string> top_ids;
    std::vector<double> top_ratings;
    for (int i = 0; i < k && i < static_cast<int>(ranked.ranked.size()); ++i) {
      top_ids.push_back(ranked.ranked[i].post_id);
      const auto it = medians.find(ranked.ranked[i].post_id);
      top_ratings.push_back(it == medians.end() ? 1.0 : it->second);
    }
    std::optional<double> prec;
    try {
      prec = metrics::precision_at_k(top_ids, judgments, k, relevance_threshold);
    } catch (const DataError&) {
      prec.reset();  // nothing judged in the top k
    }
    const double dcg = metrics::dcg_at_k(top_ratings, k);

    if (prec) {
      sum_prec += *prec;
      ++n_prec;
    }
    sum_dcg += dcg;

    if (as_json) {
      json jq;
      jq["query_id"] = qid;
      jq["judged"] = sims.size();
      jq["pearson_r"] = corr ? json(corr->r) : json(nullptr);
      jq["pearson_p"] = corr ? json(corr->p) : json(nullptr);
      jq["precision_at_k"] = prec ? json(*prec) : json(nullptr);
      jq["dcg_at_k"] = dcg;
      queries.push_back(std::move(jq));
    } else {
      std::cout << qid << "\t" << (corr ? fmt(corr->r, 4) : "-") << "\t"
                << (corr ? fmt(corr->p, 4) : "-") << "\t" << (prec ? fmt(*prec, 4) : "-") << "\t"
                << fmt(dcg, 4) << "\n";
    }
  }

  std::optional<metrics::Correlation> pooled;
  if (pooled_sims.size() >= 3) {
    try {
      pooled = metrics::pearson_with_p(pooled_sims, pooled_ratings);
    } catch (const DataError&) {
      pooled.reset();
    }
  }

  // Agreement over all (query, retrieved) items with >= 2 ratings.
  std::map<std::pair<std::string, std::string>, std::vector<double>> items;
  for (const auto& j : all) items[{j.query_id, j.retrieved_id}].push_back(j.rating);
  std::vector<std::vector<double>> ratings_by_item;
  for (auto& [key, ratings] : items) ratings_by_item.push_back(std::move(ratings));
  std::optional<double> alpha;
  try {
    alpha = metrics::krippendorff_alpha(ratings_by_item, agreement);
  } catch (const DataError&) {
    alpha.reset();  // not enough multiply-rated items
  }

  const std::size_t nq = by_query.size();
  if (as_json) {
    json j;
    j["k"] = k;
    j["mode"] = retrieval::to_string(mode);
    j["queries"] = std::move(queries);
    j["pooled"] = {{"pearson_r", pooled ? json(pooled->r) : json(nullptr)},
                   {"pearson_p", pooled ? json(pooled->p) : json(nullptr)},
                   {"mean_precision_at_k", n_prec ? json(sum_prec / n_prec) : json(nullptr)},
                   {"mean_dcg_at_k", sum_dcg / static_cast<double>(nq)}};
    j["krippendorff_alpha"] = alpha ? json(*alpha) : json(nullptr);
    std::cout << j.dump(2) << "\n";
  } else {
    std::cout << "pooled\t" << (pooled ? fmt(pooled->r, 4) : "-") << "\t"
              << (pooled ? fmt(pooled->p, 4) : "-") << "\t"
              << (n_prec ? fmt(sum_prec / n_prec, 4) : "-") << "\t"
              << fmt(sum_dcg / static_cast<double>(nq), 4) << "\n";
    std::cout << "krippendorff_alpha\t" << (alpha ? fmt(*alpha, 4) : "-") << "\n";
  }
  return 0;
}

// --------------------------------------------------------------- gradcheck

int cmd_gradcheck(const std::string& arch_name, int rows, int dim, int filters, int lstm_hidden,
                  int dense_hidden, double epsilon, double threshold, std::uint64_t seed,
                  bool as_json) {
  std::vector<classifier::ArchKind> kinds;
  if (arch_name == "all") {
    kinds = {classifier::ArchKind::CnnBaseline, classifier::ArchKind::Lstm,
             classifier::ArchKind::CnnLstm, classifier::ArchKind::CnnLstmCnn};
  } else {
    kinds = {classifier::parse_arch_kind(arch_name)};
  }

  bool ok = true;
  json results = json::array();
  for (std::size_t i = 0; i < kinds.size(); ++i) {
    classifier::ArchitectureSpec spec;
    spec.kind = kinds[i];
    spec.filters = filters;
    spec.lstm_hidden = lstm_hidden;
    spec.dense_hidden = dense_hidden;

    classifier::Network net(spec, dim, rows);
    util::Rng rng(util::mix_seed(seed, i));
    net.init(rng);

    neural::Tensor2D input(rows, dim);
    for (double& v : input.v) v = rng.uniform(-1.0, 1.0);
    const int target = 1;

    classifier::NetworkCache cache;
    net.zero_grads();
    const auto logits = net.forward(input, cache);
    const auto loss = neural::softmax_cross_entropy(logits, target);
    net.backward(loss.dlogits, cache);

    const auto params = net.params();
    std::size_t n_params = 0;
    for (const auto& p : params) n_params += p.size;

    const double worst = neural::finite_difference_check(
        params,
        [&]() {
          classifier::NetworkCache c2;
          const auto l = net.forward(input, c2);
          return neural::softmax_cross_entropy(l, target).loss;
        },
        epsilon);

    const bool pass = worst < threshold;
    ok = ok && pass;
    if (as_json) {
      json j;
      j["architecture"] = classifier::to_string(kinds[i]);
      j["parameters"] = n_params;
      j["max_relative_error"] = worst;
      j["pass"] = pass;
      results.push_back(std::move(j));
    } else {
      std::cout << classifier::to_string(kinds[i]) << "\t" << n_params << " params\tmax rel err "
                << fmt(worst, 10) << "\t" << (pass ? "ok" : "FAIL") << "\n";
    }
  }
  if (as_json) {
    json j;
    j["threshold"] = threshold;
    j["results"] = std::move(results);
    j["pass"] = ok;
    std::cout << j.dump(2) << "\n";
  }
  return ok ? 0 : 2;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Medical-forum sentiment, retrieval and suggestion pipeline"};
  app.require_subcommand(1);

  // ingest
  auto* ingest = app.add_subcommand("ingest", "Read a JSONL corpus, validate, optionally store");
  std::string in_input, in_output, in_config;
  bool in_json = false;
  ingest->add_option("--input", in_input, "Corpus JSONL file");
  ingest->add_option("--output", in_output, "Binary store to write");
  ingest->add_flag("--json", in_json, "Machine-readable output");
  ingest->add_option("--config", in_config, "JSON config file");

  // extract-concepts
  auto* extract = app.add_subcommand("extract-concepts", "Run lexicon extraction over posts");
  std::string ex_corpus, ex_stopwords, ex_lexicon, ex_id, ex_config;
  bool ex_json = false;
  extract->add_option("--corpus", ex_corpus, "Corpus file (JSONL or store)");
  extract->add_option("--stopwords", ex_stopwords, "Stopword file");
  extract->add_option("--lexicon", ex_lexicon, "Concept lexicon TSV");
  extract->add_option("--id", ex_id, "Only this post id");
  extract->add_flag("--json", ex_json, "Machine-readable output");
  extract->add_option("--config", ex_config, "JSON config file");

  // train
  auto* train = app.add_subcommand("train", "Train a sentiment model");
  std::string tr_corpus, tr_stopwords, tr_embeddings, tr_output, tr_arch = "cnn-lstm-cnn",
              tr_config;
  classifier::TrainConfig tr_cfg;
  classifier::ArchitectureSpec tr_spec;
  int tr_max_len = 150;
  bool tr_json = false;
  train->add_option("--corpus", tr_corpus, "Corpus file (JSONL or store)");
  train->add_option("--stopwords", tr_stopwords, "Stopword file");
  train->add_option("--embeddings", tr_embeddings, "word2vec text file");
  train->add_option("--output", tr_output, "Model file to write");
  train->add_option("--arch", tr_arch, "cnn-baseline | lstm | cnn-lstm | cnn-lstm-cnn");
  train->add_option("--filters", tr_spec.filters, "Filters per convolution branch");
  train->add_option("--filter-sizes", tr_spec.filter_sizes, "Convolution kernel sizes")
      ->delimiter(',');
  train->add_option("--lstm-hidden", tr_spec.lstm_hidden, "LSTM hidden units");
  train->add_option("--dense-hidden", tr_spec.dense_hidden, "Hidden dense units");
  train->add_option("--epochs", tr_cfg.epochs, "Training epochs");
  train->add_option("--batch-size", tr_cfg.batch_size, "Mini-batch size");
  train->add_option("--learning-rate", tr_cfg.learning_rate, "Optimizer learning rate");
  train->add_option("--patience", tr_cfg.patience, "Early-stop patience (<=0 disables)");
  train->add_option("--seed", tr_cfg.seed, "Random seed");
  train->add_option("--max-len", tr_max_len, "Sequence length ceiling");
  train->add_flag("--json", tr_json, "Machine-readable output");
  train->add_option("--config", tr_config, "JSON config file");

  // classify
  auto* classify = app.add_subcommand("classify", "Predict sentiment with a trained model");
  std::string cl_model, cl_stopwords, cl_embeddings, cl_text, cl_corpus, cl_id, cl_config;
  bool cl_json = false;
  classify->add_option("--model", cl_model, "Model file");
  classify->add_option("--stopwords", cl_stopwords, "Stopword file");
  classify->add_option("--embeddings", cl_embeddings, "word2vec text file");
  classify->add_option("--text", cl_text, "Classify this text");
  classify->add_option("--corpus", cl_corpus, "Classify posts from this corpus");
  classify->add_option("--id", cl_id, "Only this post id");
  classify->add_flag("--json", cl_json, "Machine-readable output");
  classify->add_option("--config", cl_config, "JSON config file");

  // retrieve
  auto* retrieve = app.add_subcommand("retrieve", "Rank similar posts for a query");
  std::string re_corpus, re_stopwords, re_embeddings, re_lexicon, re_qid, re_qtext,
      re_mode = "full", re_config;
  int re_top = 5, re_threads = 1;
  bool re_json = false;
  retrieve->add_option("--corpus", re_corpus, "Corpus file (JSONL or store)");
  retrieve->add_option("--stopwords", re_stopwords, "Stopword file");
  retrieve->add_option("--embeddings", re_embeddings, "word2vec text file");
  retrieve->add_option("--lexicon", re_lexicon, "Concept lexicon TSV");
  retrieve->add_option("--query-id", re_qid, "Query post id from the corpus");
  retrieve->add_option("--query-text", re_qtext, "Ad-hoc query text");
  retrieve->add_option("--top", re_top, "Number of results");
  retrieve->add_option("--mode", re_mode, "full | text-only");
  retrieve->add_option("--threads", re_threads, "Worker threads");
  retrieve->add_flag("--json", re_json, "Machine-readable output");
  retrieve->add_option("--config", re_config, "JSON config file");

  // suggest
  auto* suggest = app.add_subcommand("suggest", "Suggest treatments for a query post");
  std::string su_corpus, su_stopwords, su_embeddings, su_lexicon, su_model, su_qid, su_qtext,
      su_config;
  suggestion::SuggestionConfig su_cfg;
  int su_threads = 1;
  bool su_json = false;
  suggest->add_option("--corpus", su_corpus, "Corpus file (JSONL or store)");
  suggest->add_option("--stopwords", su_stopwords, "Stopword file");
  suggest->add_option("--embeddings", su_embeddings, "word2vec text file");
  suggest->add_option("--lexicon", su_lexicon, "Concept lexicon TSV");
  suggest->add_option("--model", su_model, "Model for posts without labels");
  suggest->add_option("--query-id", su_qid, "Query post id from the corpus");
  suggest->add_option("--query-text", su_qtext, "Ad-hoc query text");
  suggest->add_option("--tau", su_cfg.tau, "Suggestion score threshold");
  suggest->add_option("--alpha", su_cfg.alpha, "Additive smoothing");
  suggest->add_option("--max-per-disease", su_cfg.max_per_disease, "Cap per disease");
  suggest->add_option("--threads", su_threads, "Worker threads");
  suggest->add_flag("--json", su_json, "Machine-readable output");
  suggest->add_option("--config", su_config, "JSON config file");

  // evaluate
  auto* evaluate = app.add_subcommand(
      "evaluate", "Cross-validate the classifier, or score retrieval against judgments");
  std::string ev_corpus, ev_stopwords, ev_embeddings, ev_lexicon, ev_judgments,
      ev_arch = "cnn-lstm-cnn", ev_mode = "full", ev_agreement = "interval", ev_config;
  classifier::TrainConfig ev_cfg;
  classifier::ArchitectureSpec ev_spec;
  int ev_folds = 5, ev_threads = 1, ev_top = 5, ev_max_len = 150;
  double ev_rel_threshold = 4.0;
  bool ev_json = false;
  evaluate->add_option("--corpus", ev_corpus, "Corpus file (JSONL or store)");
  evaluate->add_option("--stopwords", ev_stopwords, "Stopword file");
  evaluate->add_option("--embeddings", ev_embeddings, "word2vec text file");
  evaluate->add_option("--lexicon", ev_lexicon, "Concept lexicon TSV (retrieval eval)");
  evaluate->add_option("--judgments", ev_judgments,
                       "Relevance judgment TSV; presence switches to retrieval evaluation");
  evaluate->add_option("--arch", ev_arch, "Architecture for cross-validation");
  evaluate->add_option("--filters", ev_spec.filters, "Filters per convolution branch");
  evaluate->add_option("--filter-sizes", ev_spec.filter_sizes, "Convolution kernel sizes")
      ->delimiter(',');
  evaluate->add_option("--lstm-hidden", ev_spec.lstm_hidden, "LSTM hidden units");
  evaluate->add_option("--dense-hidden", ev_spec.dense_hidden, "Hidden dense units");
  evaluate->add_option("--epochs", ev_cfg.epochs, "Training epochs");
  evaluate->add_option("--batch-size", ev_cfg.batch_size, "Mini-batch size");
  evaluate->add_option("--learning-rate", ev_cfg.learning_rate, "Optimizer learning rate");
  evaluate->add_option("--patience", ev_cfg.patience, "Early-stop patience (<=0 disables)");
  evaluate->add_option("--seed", ev_cfg.seed, "Random seed");
  evaluate->add_option("--max-len", ev_max_len, "Sequence length ceiling");
  evaluate->add_option("--folds", ev_folds, "Cross-validation folds");
  evaluate->add_option("--top", ev_top, "k for precision@k and DCG@k");
  evaluate->add_option("--mode", ev_mode, "Retrieval mode: full | text-only");
  evaluate->add_option("--relevance-threshold", ev_rel_threshold,
                       "Median rating counted as relevant");
  evaluate->add_option("--agreement", ev_agreement, "Krippendorff level: interval | ordinal");
  evaluate->add_option("--threads", ev_threads, "Worker threads");
  evaluate->add_flag("--json", ev_json, "Machine-readable output");
  evaluate->add_option("--config", ev_config, "JSON config file");

  // gradcheck
  auto* gradcheck = app.add_subcommand("gradcheck", "Verify gradients against finite differences");
  std::string gc_arch = "all", gc_config;
  int gc_rows = 6, gc_dim = 8, gc_filters = 4, gc_lstm = 5, gc_dense = 6;
  double gc_epsilon = 1e-5, gc_threshold = 1e-4;
  std::uint64_t gc_seed = 1;
  bool gc_json = false;
  gradcheck->add_option("--arch", gc_arch, "all | cnn-baseline | lstm | cnn-lstm | cnn-lstm-cnn");
  gradcheck->add_option("--rows", gc_rows, "Toy input time steps");
  gradcheck->add_option("--dim", gc_dim, "Toy input channels");
  gradcheck->add_option("--filters", gc_filters, "Filters per convolution branch");
  gradcheck->add_option("--lstm-hidden", gc_lstm, "LSTM hidden units");
  gradcheck->add_option("--dense-hidden", gc_dense, "Hidden dense units");
  gradcheck->add_option("--epsilon", gc_epsilon, "Finite-difference step");
  gradcheck->add_option("--threshold", gc_threshold, "Maximum acceptable relative error");
  gradcheck->add_option("--seed", gc_seed, "Random seed");
  gradcheck->add_flag("--json", gc_json, "Machine-readable output");
  gradcheck->add_option("--config", gc_config, "JSON config file");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << e.what() << "\n";
    return 1;
  }

  try {
    if (*ingest) {
      ConfigMerger cm(ingest, in_config);
      cm.merge("input", in_input);
      cm.merge("output", in_output);
      cm.merge("json", in_json);
      if (in_input.empty()) throw DataError("ingest needs --input");
      return cmd_ingest(in_input, in_output, in_json);
    }
    if (*extract) {
      ConfigMerger cm(extract, ex_config);
      cm.merge("corpus", ex_corpus);
      cm.merge("stopwords", ex_stopwords);
      cm.merge("lexicon", ex_lexicon);
      cm.merge("id", ex_id);
      cm.merge("json", ex_json);
      if (ex_corpus.empty() || ex_stopwords.empty() || ex_lexicon.empty())
        throw DataError("extract-concepts needs --corpus, --stopwords and --lexicon");
      return cmd_extract_concepts(ex_corpus, ex_stopwords, ex_lexicon, ex_id, ex_json);
    }
    if (*train) {
      ConfigMerger cm(train, tr_config);
      cm.merge("corpus", tr_corpus);
      cm.merge("stopwords", tr_stopwords);
      cm.merge("embeddings", tr_embeddings);
      cm.merge("output", tr_output);
      cm.merge("arch", tr_arch);
      cm.merge("filters", tr_spec.filters);
      cm.merge("filter-sizes", tr_spec.filter_sizes);
      cm.merge("lstm-hidden", tr_spec.lstm_hidden);
      cm.merge("dense-hidden", tr_spec.dense_hidden);
      cm.merge("epochs", tr_cfg.epochs);
      cm.merge("batch-size", tr_cfg.batch_size);
      cm.merge("learning-rate", tr_cfg.learning_rate);
      cm.merge("patience", tr_cfg.patience);
      cm.merge("seed", tr_cfg.seed);
      cm.merge("max-len", tr_max_len);
      cm.merge("json", tr_json);
      if (tr_corpus.empty() || tr_stopwords.empty() || tr_embeddings.empty())
        throw DataError("train needs --corpus, --stopwords and --embeddings");
      tr_spec.kind = classifier::parse_arch_kind(tr_arch);
      return cmd_train(tr_corpus, tr_stopwords, tr_embeddings, tr_output, tr_spec, tr_cfg,
                       tr_max_len, tr_json);
    }
    if (*classify) {
      ConfigMerger cm(classify, cl_config);
      cm.merge("model", cl_model);
      cm.merge("stopwords", cl_stopwords);
      cm.merge("embeddings", cl_embeddings);
      cm.merge("text", cl_text);
      cm.merge("corpus", cl_corpus);
      cm.merge("id", cl_id);
      cm.merge("json", cl_json);
      if (cl_model.empty() || cl_stopwords.empty() || cl_embeddings.empty())
        throw DataError("classify needs --model, --stopwords and --embeddings");
      if (cl_text.empty() == cl_corpus.empty())
        throw DataError("classify needs exactly one of --text or --corpus");
      return cmd_classify(cl_model, cl_stopwords, cl_embeddings, cl_text, cl_corpus, cl_id,
                          cl_json);
    }
    if (*retrieve) {
      ConfigMerger cm(retrieve, re_config);
      cm.merge("corpus", re_corpus);
      cm.merge("stopwords", re_stopwords);
      cm.merge("embeddings", re_embeddings);
      cm.merge("lexicon", re_lexicon);
      cm.merge("query-id", re_qid);
      cm.merge("query-text", re_qtext);
      cm.merge("top", re_top);
      cm.merge("mode", re_mode);
      cm.merge("threads", re_threads);
      cm.merge("json", re_json);
      if (re_corpus.empty() || re_stopwords.empty() || re_embeddings.empty() ||
          re_lexicon.empty())
        throw DataError("retrieve needs --corpus, --stopwords, --embeddings and --lexicon");
      if (re_qid.empty() == re_qtext.empty())
        throw DataError("retrieve needs exactly one of --query-id or --query-text");
      return cmd_retrieve(re_corpus, re_stopwords, re_embeddings, re_lexicon, re_qid, re_qtext,
                          re_top, retrieval::parse_mode(re_mode), re_threads, re_json);
    }
    if (*suggest) {
      ConfigMerger cm(suggest, su_config);
      cm.merge("corpus", su_corpus);
      cm.merge("stopwords", su_stopwords);
      cm.merge("embeddings", su_embeddings);
      cm.merge("lexicon", su_lexicon);
      cm.merge("model", su_model);
      cm.merge("query-id", su_qid);
      cm.merge("query-text", su_qtext);
      cm.merge("tau", su_cfg.tau);
      cm.merge("alpha", su_cfg.alpha);
      cm.merge("max-per-disease", su_cfg.max_per_disease);
      cm.merge("threads", su_threads);
      cm.merge("json", su_json);
      if (su_corpus.empty() || su_stopwords.empty() || su_embeddings.empty() ||
          su_lexicon.empty())
        throw DataError("suggest needs --corpus, --stopwords, --embeddings and --lexicon");
      if (su_qid.empty() == su_qtext.empty())
        throw DataError("suggest needs exactly one of --query-id or --query-text");
      return cmd_suggest(su_corpus, su_stopwords, su_embeddings, su_lexicon, su_model, su_qid,
                         su_qtext, su_cfg, su_threads, su_json);
    }
    if (*evaluate) {
      ConfigMerger cm(evaluate, ev_config);
      cm.merge("corpus", ev_corpus);
      cm.merge("stopwords", ev_stopwords);
      cm.merge("embeddings", ev_embeddings);
      cm.merge("lexicon", ev_lexicon);
      cm.merge("judgments", ev_judgments);
      cm.merge("arch", ev_arch);
      cm.merge("filters", ev_spec.filters);
      cm.merge("filter-sizes", ev_spec.filter_sizes);
      cm.merge("lstm-hidden", ev_spec.lstm_hidden);
      cm.merge("dense-hidden", ev_spec.dense_hidden);
      cm.merge("epochs", ev_cfg.epochs);
      cm.merge("batch-size", ev_cfg.batch_size);
      cm.merge("learning-rate", ev_cfg.learning_rate);
      cm.merge("patience", ev_cfg.patience);
      cm.merge("seed", ev_cfg.seed);
      cm.merge("max-len", ev_max_len);
      cm.merge("folds", ev_folds);
      cm.merge("top", ev_top);
      cm.merge("mode", ev_mode);
      cm.merge("relevance-threshold", ev_rel_threshold);
      cm.merge("agreement", ev_agreement);
      cm.merge("threads", ev_threads);
      cm.merge("json", ev_json);
      if (ev_corpus.empty() || ev_stopwords.empty() || ev_embeddings.empty())
        throw DataError("evaluate needs --corpus, --stopwords and --embeddings");
      if (!ev_judgments.empty()) {
        if (ev_lexicon.empty())
          throw DataError("retrieval evaluation needs --lexicon");
        metrics::AgreementLevel level;
        if (ev_agreement == "interval")
          level = metrics::AgreementLevel::Interval;
        else if (ev_agreement == "ordinal")
          level = metrics::AgreementLevel::Ordinal;
        else
          throw DataError("unknown agreement level: " + ev_agreement);
        return cmd_evaluate_retrieval(ev_corpus, ev_stopwords, ev_embeddings, ev_lexicon,
                                      ev_judgments, ev_top, retrieval::parse_mode(ev_mode),
                                      ev_rel_threshold, level, ev_threads, ev_json);
      }
      ev_spec.kind = classifier::parse_arch_kind(ev_arch);
      return cmd_evaluate_classification(ev_corpus, ev_stopwords, ev_embeddings, ev_spec, ev_cfg,
                                         ev_folds, ev_threads, ev_max_len, ev_json);
    }
    if (*gradcheck) {
      ConfigMerger cm(gradcheck, gc_config);
      cm.merge("arch", gc_arch);
      cm.merge("rows", gc_rows);
      cm.merge("dim", gc_dim);
      cm.merge("filters", gc_filters);
      cm.merge("lstm-hidden", gc_lstm);
      cm.merge("dense-hidden", gc_dense);
      cm.merge("epsilon", gc_epsilon);
      cm.merge("threshold", gc_threshold);
      cm.merge("seed", gc_seed);
      cm.merge("json", gc_json);
      return cmd_gradcheck(gc_arch, gc_rows, gc_dim, gc_filters, gc_lstm, gc_dense, gc_epsilon,
                           gc_threshold, gc_seed, gc_json);
    }
  } catch (const DataError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
