#include "medforum/embeddings.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <iostream>
#include <sstream>

namespace medforum::embeddings {

void EmbeddingTable::insert(const std::string& word, std::vector<double> vec) {
  if (static_cast<int>(vec.size()) != dim_)
    throw DataError("vector for \"" + word + "\" has " + std::to_string(vec.size()) +
                    " components, table dimension is " + std::to_string(dim_));
  entries_[word] = std::move(vec);
}

namespace {

bool parse_double(std::string_view tok, double& out) {
  const char* first = tok.data();
  const char* last = tok.data() + tok.size();
  auto [ptr, ec] = std::from_chars(first, last, out);
  return ec == std::errc() && ptr == last;
}

std::vector<std::string_view> split_ws(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && (line[i] == ' ' || line[i] == '\t' || line[i] == '\r')) ++i;
    std::size_t j = i;
    while (j < line.size() && line[j] != ' ' && line[j] != '\t' && line[j] != '\r') ++j;
    if (j > i) out.push_back(line.substr(i, j - i));
    i = j;
  }
  return out;
}

}  // namespace

EmbeddingTable load_embeddings(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw DataError("cannot open embeddings file: " + path);

  std::string line;
  std::size_t line_no = 0;
  if (!std::getline(is, line)) throw DataError("empty embeddings file: " + path);
  ++line_no;

  auto header = split_ws(line);
  long declared_vocab = 0, dim = 0;
  auto parse_long = [](std::string_view tok, long& out) {
    auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), out);
    return ec == std::errc() && ptr == tok.data() + tok.size();
  };
  if (header.size() != 2 || !parse_long(header[0], declared_vocab) ||
      !parse_long(header[1], dim) || dim < 1 || declared_vocab < 0)
    throw DataError("line 1: expected header \"<vocab_size> <dim>\"");

  EmbeddingTable table(static_cast<int>(dim));
  while (std::getline(is, line)) {
    ++line_no;
    auto fields = split_ws(line);
    if (fields.empty()) continue;
    if (static_cast<long>(fields.size()) != dim + 1)
      throw DataError("line " + std::to_string(line_no) + ": expected " + std::to_string(dim) +
                      " components, got " + std::to_string(fields.size() - 1));
    std::string word(fields[0]);
    std::vector<double> vec(dim);
    for (long d = 0; d < dim; ++d) {
      if (!parse_double(fields[d + 1], vec[d]))
        throw DataError("line " + std::to_string(line_no) + ": bad float \"" +
                        std::string(fields[d + 1]) + "\"");
    }
    if (table.find(word) != nullptr)
      std::cerr << "warning: duplicate word \"" << word << "\" at line " << line_no
                << ", keeping the last occurrence\n";
    table.insert(word, std::move(vec));
  }
  if (table.size() == 0) throw DataError("empty embeddings file: " + path);
  if (declared_vocab != 0 && static_cast<long>(table.size()) != declared_vocab)
    std::cerr << "warning: header declares " << declared_vocab << " words, file has "
              << table.size() << "\n";
  return table;
}

void save_embeddings(const EmbeddingTable& table, const std::string& path) {
  std::ofstream os(path);
  if (!os) throw DataError("cannot open embeddings file for writing: " + path);
  std::vector<std::string> words;
  words.reserve(table.size());
  for (const auto& [w, _] : table.entries()) words.push_back(w);
  std::sort(words.begin(), words.end());
  os << table.size() << ' ' << table.dim() << '\n';
  os.precision(17);
  for (const auto& w : words) {
    os << w;
    for (double x : *table.find(w)) os << ' ' << x;
    os << '\n';
  }
  if (!os) throw DataError("write failure on embeddings file: " + path);
}

EmbeddingTable random_table(const std::vector<std::string>& vocab, int dim,
                            std::uint64_t seed) {
  if (dim < 1) throw DataError("embedding dimension must be >= 1");
  EmbeddingTable table(dim);
  util::Rng rng(seed);
  const double half = 0.5 / dim;
  for (const auto& word : vocab) {
    std::vector<double> vec(dim);
    for (int d = 0; d < dim; ++d) vec[d] = rng.uniform(-half, half);
    table.insert(word, std::move(vec));
  }
  return table;
}

DocVector doc_vector(const std::vector<std::string>& tokens, const EmbeddingTable& table) {
  DocVector dv;
  dv.values.assign(table.dim(), 0.0);
  for (const auto& tok : tokens) {
    if (const auto* vec = table.find(tok)) {
      for (int d = 0; d < table.dim(); ++d) dv.values[d] += (*vec)[d];
      ++dv.token_count;
    }
  }
  return dv;
}

double cosine(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.size() != b.size())
    throw DataError("cosine: dimension mismatch (" + std::to_string(a.size()) + " vs " +
                    std::to_string(b.size()) + ")");
  double dot = 0.0, na = 0.0, nb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    dot += a[i] * b[i];
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  if (na == 0.0 || nb == 0.0) return 0.0;
  return dot / (std::sqrt(na) * std::sqrt(nb));
}

}  // namespace medforum::embeddings
