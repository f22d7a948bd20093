#pragma once

#include <cstdint>
#include <string>
#include <unordered_map>
#include <vector>

#include "medforum/util.hpp"

namespace medforum::embeddings {

// Word -> fixed-dimension vector map. Immutable after load; safe to share
// across threads.
class EmbeddingTable {
 public:
  EmbeddingTable() = default;
  explicit EmbeddingTable(int dim) : dim_(dim) {}

  int dim() const { return dim_; }
  std::size_t size() const { return entries_.size(); }

  // Returns nullptr for out-of-vocabulary words.
  const std::vector<double>* find(const std::string& word) const {
    auto it = entries_.find(word);
    return it == entries_.end() ? nullptr : &it->second;
  }

  // Inserts or replaces; the vector must have exactly dim() components.
  void insert(const std::string& word, std::vector<double> vec);

  const std::unordered_map<std::string, std::vector<double>>& entries() const {
    return entries_;
  }

 private:
  int dim_ = 0;
  std::unordered_map<std::string, std::vector<double>> entries_;
};

// Loads word2vec text format: header "<vocab_size> <dim>", then one
// "<word> <v1> ... <vdim>" line per word. Component-count mismatches are
// reported with their line number; duplicate words keep the last occurrence
// and print a warning to stderr.
EmbeddingTable load_embeddings(const std::string& path);

// Writes the table in the same text format (word order sorted for
// reproducibility). Used by tooling and tests.
void save_embeddings(const EmbeddingTable& table, const std::string& path);

// Deterministic random table for the given vocabulary; components are
// uniform in [-0.5/dim, 0.5/dim], the word2vec initialization convention.
EmbeddingTable random_table(const std::vector<std::string>& vocab, int dim,
                            std::uint64_t seed);

// Document vector: componentwise sum over in-vocabulary tokens.
struct DocVector {
  std::vector<double> values;
  int token_count = 0;
};

DocVector doc_vector(const std::vector<std::string>& tokens, const EmbeddingTable& table);

// Cosine similarity in [-1, 1]; defined as 0 when either norm is zero.
double cosine(const std::vector<double>& a, const std::vector<double>& b);

}  // namespace medforum::embeddings
