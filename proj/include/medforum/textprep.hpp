#pragma once

#include <string>
#include <string_view>
#include <unordered_set>
#include <vector>

#include "medforum/corpus.hpp"
#include "medforum/embeddings.hpp"
#include "medforum/neural.hpp"

namespace medforum::textprep {

using StopwordSet = std::unordered_set<std::string>;
using TokenSequence = std::vector<std::string>;

// One stopword per line, UTF-8. Words are lowercased on load.
StopwordSet load_stopwords(const std::string& path);

// Raw post text -> token sequence: lowercase, drop non-ASCII bytes, split on
// non-alphanumerics, drop stopwords and tokens shorter than 3 characters.
// Total function; empty input gives an empty sequence.
TokenSequence preprocess(std::string_view text, const StopwordSet& stopwords);

// Lexicon-phrase variant of the pipeline: identical except the length filter,
// so short medical terms survive as match targets.
TokenSequence preprocess_keep_short(std::string_view text, const StopwordSet& stopwords);

// Fixed-size embedding matrix for one post. Padding rows are zero.
struct PostMatrix {
  neural::Tensor2D values;            // max_len x dim
  std::vector<std::uint8_t> mask;     // 1 where the row holds a real token
};

// Stacks token embeddings into a max_len x dim matrix. Out-of-vocabulary
// tokens are skipped without consuming a row; overlong sequences keep the
// head and are truncated at the tail.
PostMatrix vectorize(const TokenSequence& tokens, const embeddings::EmbeddingTable& table,
                     int max_len);

// Maximum in-vocabulary token count over the posts of the (training) corpus,
// floored at 1 and clamped to `ceiling`.
int compute_max_len(const corpus::Corpus& training, const StopwordSet& stopwords,
                    const embeddings::EmbeddingTable& table, int ceiling = 150);

// Same over an explicit list of training posts (used by fold training).
int compute_max_len(const std::vector<const corpus::ForumPost*>& training_posts,
                    const StopwordSet& stopwords, const embeddings::EmbeddingTable& table,
                    int ceiling = 150);

}  // namespace medforum::textprep
