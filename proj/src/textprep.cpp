#include "medforum/textprep.hpp"

#include <algorithm>
#include <fstream>

namespace medforum::textprep {

StopwordSet load_stopwords(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw DataError("cannot open stopword file: " + path);
  StopwordSet stop;
  std::string line;
  while (std::getline(is, line)) {
    while (!line.empty() && (line.back() == '\r' || line.back() == ' ' || line.back() == '\t'))
      line.pop_back();
    std::size_t start = 0;
    while (start < line.size() && (line[start] == ' ' || line[start] == '\t')) ++start;
    line.erase(0, start);
    if (line.empty()) continue;
    std::transform(line.begin(), line.end(), line.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    stop.insert(line);
  }
  return stop;
}

namespace {

TokenSequence tokenize(std::string_view text, const StopwordSet& stopwords,
                       std::size_t min_len) {
  TokenSequence out;
  std::string cur;
  auto flush = [&] {
    if (cur.size() >= min_len && stopwords.find(cur) == stopwords.end())
      out.push_back(cur);
    cur.clear();
  };
  for (unsigned char ch : text) {
    if (ch >= 0x80) continue;  // non-ASCII bytes vanish, merging their neighbors
    const char c = static_cast<char>(std::tolower(ch));
    if ((c >= 'a' && c <= 'z') || (c >= '0' && c <= '9'))
      cur.push_back(c);
    else
      flush();
  }
  flush();
  return out;
}

}  // namespace

TokenSequence preprocess(std::string_view text, const StopwordSet& stopwords) {
  return tokenize(text, stopwords, 3);
}

TokenSequence preprocess_keep_short(std::string_view text, const StopwordSet& stopwords) {
  return tokenize(text, stopwords, 1);
}

PostMatrix vectorize(const TokenSequence& tokens, const embeddings::EmbeddingTable& table,
                     int max_len) {
  if (max_len < 1) throw DataError("max_len must be >= 1");
  PostMatrix pm;
  pm.values = neural::Tensor2D(max_len, table.dim());
  pm.mask.assign(max_len, 0);
  int row = 0;
  for (const auto& tok : tokens) {
    if (row == max_len) break;
    const auto* vec = table.find(tok);
    if (!vec) continue;  // OOV tokens do not consume a row
    for (int d = 0; d < table.dim(); ++d) pm.values(row, d) = (*vec)[d];
    pm.mask[row] = 1;
    ++row;
  }
  return pm;
}

int compute_max_len(const corpus::Corpus& training, const StopwordSet& stopwords,
                    const embeddings::EmbeddingTable& table, int ceiling) {
  std::vector<const corpus::ForumPost*> ptrs;
  ptrs.reserve(training.posts.size());
  for (const auto& post : training.posts) ptrs.push_back(&post);
  return compute_max_len(ptrs, stopwords, table, ceiling);
}

int compute_max_len(const std::vector<const corpus::ForumPost*>& training_posts,
                    const StopwordSet& stopwords, const embeddings::EmbeddingTable& table,
                    int ceiling) {
  if (training_posts.empty()) throw DataError("compute_max_len: empty corpus");
  if (ceiling < 1) throw DataError("compute_max_len: ceiling must be >= 1");
  int max_count = 0;
  for (const auto* post : training_posts) {
    int count = 0;
    for (const auto& tok : preprocess(post->text, stopwords))
      if (table.find(tok) != nullptr) ++count;
    max_count = std::max(max_count, count);
  }
  return std::clamp(max_count, 1, ceiling);
}

}  // namespace medforum::textprep
