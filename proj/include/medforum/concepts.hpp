#pragma once

#include <map>
#include <set>
#include <string>
#include <vector>

#include "medforum/textprep.hpp"

// Dictionary-based concept extraction. The lexicon maps token phrases to
// concept identifiers tagged with a semantic type; extraction scans a
// preprocessed token sequence greedily, preferring the longest phrase
// starting at each position.

namespace medforum::concepts {

enum class SemType { Disease, Symptom, Treatment };

std::string to_string(SemType t);
SemType parse_sem_type(const std::string& s);

struct ConceptEntry {
  std::string concept_id;
  SemType sem_type;
};

// Concept identifiers present in one post, split by semantic type. Ordered
// sets so iteration and serialization are deterministic.
struct ConceptSet {
  std::set<std::string> diseases;
  std::set<std::string> symptoms;
  std::set<std::string> treatments;

  bool operator==(const ConceptSet&) const = default;
};

class ConceptLexicon {
 public:
  // Registers a phrase given as raw text; it is normalized with the same
  // pipeline as post text except that short tokens survive. A phrase may
  // carry several semantic types, but repeating a (phrase, semtype) pair
  // is an error.
  void add(const std::string& phrase, const textprep::StopwordSet& stopwords,
           const std::string& concept_id, SemType sem_type);

  ConceptSet extract(const textprep::TokenSequence& tokens) const;

  std::size_t size() const { return entry_count_; }
  int max_phrase_len() const { return max_len_; }

 private:
  // Normalized phrase tokens joined with '\x1f', mapped to the entries in
  // load order.
  std::map<std::string, std::vector<ConceptEntry>> phrases_;
  std::size_t entry_count_ = 0;
  int max_len_ = 0;
};

// Tab-separated file: phrase, concept id, semantic type (Disease, Symptom
// or Treatment). Blank lines and lines starting with '#' are skipped.
ConceptLexicon load_lexicon(const std::string& path, const textprep::StopwordSet& stopwords);

// |a intersect b| / |a union b|, with the empty-over-empty case defined as 0.
double jaccard(const std::set<std::string>& a, const std::set<std::string>& b);

}  // namespace medforum::concepts
