#pragma once

#include <map>
#include <string>
#include <utility>
#include <vector>

#include "medforum/retrieval.hpp"

// Treatment suggestion: estimate how often a treatment co-occurs with a
// disease in positive-sentiment posts, weight by similarity to the query
// post, and keep everything clearing the threshold.

namespace medforum::suggestion {

struct PairCounts {
  long total = 0;     // posts mentioning both the treatment and the disease
  long positive = 0;  // of those, posts with Positive sentiment
};

struct PairStats {
  // keyed by (treatment id, disease id)
  std::map<std::pair<std::string, std::string>, PairCounts> counts;
};

// Counts co-occurrences over classified posts. Every post must carry a
// sentiment (gold or predicted); offenders are reported by id.
PairStats build_pair_stats(const retrieval::PreparedCorpus& pc);

// (positive + alpha) / (total + 2*alpha); a pair that never co-occurs gives
// 0 regardless of alpha.
double pr_positive(const PairStats& stats, const std::string& treatment,
                   const std::string& disease, double alpha);

struct SuggestionConfig {
  double tau = 0.3;          // minimum suggestion score
  double alpha = 0.0;        // additive smoothing; 0 keeps the hard guarantee
  int max_per_disease = 10;  // cap per query disease
};

struct Suggestion {
  std::string disease;
  std::string treatment;
  std::string evidence_post_id;  // corpus post realizing the similarity term
  double sim = 0.0;
  double pr = 0.0;
  double g = 0.0;  // sim * pr
};

struct SuggestionResult {
  std::string query_id;
  std::vector<Suggestion> items;  // sorted by g descending
};

// For each disease the query mentions and every treatment with recorded
// co-occurrence, the score is pr * max over corpus posts containing the
// treatment of sim(post, query); entries with positive score clearing tau
// survive, capped per disease. A query without diseases is an error.
SuggestionResult suggest(const retrieval::PreparedPost& query,
                         const retrieval::PreparedCorpus& pc, const PairStats& stats,
                         const SuggestionConfig& cfg);

}  // namespace medforum::suggestion
