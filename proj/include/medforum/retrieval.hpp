#pragma once

#include <optional>
#include <string>
#include <vector>

#include "medforum/concepts.hpp"
#include "medforum/corpus.hpp"
#include "medforum/embeddings.hpp"
#include "medforum/textprep.hpp"

// Similar-post ranking: concept-set Jaccard components blended with document
// cosine similarity, plus a text-only mode for the nearest-neighbour
// baseline.

namespace medforum::retrieval {

struct SimilarityBreakdown {
  double ds = 0.0;     // disease-set Jaccard
  double ss = 0.0;     // symptom-set Jaccard
  double ts = 0.0;     // cosine of document vectors, floored at 0
  double misim = 0.0;  // (2*ds + ss) / 3
  double sim = 0.0;    // (2*misim + ts) / 3
};

// Everything ranking needs about one post, computed once.
struct PreparedPost {
  std::string id;
  std::optional<corpus::Sentiment> sentiment;
  concepts::ConceptSet cset;
  embeddings::DocVector dvec;
};

struct PreparedCorpus {
  std::vector<PreparedPost> posts;  // corpus order

  const PreparedPost* find(const std::string& id) const;
};

PreparedPost prepare_post(const corpus::ForumPost& post, const textprep::StopwordSet& stopwords,
                          const concepts::ConceptLexicon& lexicon,
                          const embeddings::EmbeddingTable& table);

PreparedCorpus prepare(const corpus::Corpus& c, const textprep::StopwordSet& stopwords,
                       const concepts::ConceptLexicon& lexicon,
                       const embeddings::EmbeddingTable& table, int threads = 1);

double disease_similarity(const concepts::ConceptSet& p, const concepts::ConceptSet& q);
double symptom_similarity(const concepts::ConceptSet& p, const concepts::ConceptSet& q);

SimilarityBreakdown overall_similarity(const PreparedPost& p, const PreparedPost& q);

enum class Mode { Full, TextOnly };

std::string to_string(Mode m);
Mode parse_mode(const std::string& s);

struct RankedPost {
  std::string post_id;
  SimilarityBreakdown breakdown;
};

struct RetrievalResult {
  std::string query_id;
  int n = 0;
  Mode mode = Mode::Full;
  std::vector<RankedPost> ranked;  // best first
};

// Ranks every corpus post (minus the query itself, matched by id) by sim in
// full mode or by ts alone in text-only mode; ties break toward the smaller
// post id. Returns at most n entries; an empty corpus gives an empty result.
RetrievalResult top_n(const PreparedPost& query, const PreparedCorpus& pc, int n,
                      Mode mode = Mode::Full, int threads = 1);

}  // namespace medforum::retrieval
