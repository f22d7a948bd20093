#include "medforum/concepts.hpp"

#include <algorithm>
#include <fstream>

#include "medforum/util.hpp"

namespace medforum::concepts {

namespace {

constexpr char kJoin = '\x1f';

std::string join_tokens(const textprep::TokenSequence& tokens, std::size_t begin, std::size_t count) {
  std::string key;
  for (std::size_t i = 0; i < count; ++i) {
    if (i) key.push_back(kJoin);
    key += tokens[begin + i];
  }
  return key;
}

}  // namespace

std::string to_string(SemType t) {
  switch (t) {
    case SemType::Disease: return "Disease";
    case SemType::Symptom: return "Symptom";
    case SemType::Treatment: return "Treatment";
  }
  throw DataError("invalid semantic type value");
}

SemType parse_sem_type(const std::string& s) {
  if (s == "Disease") return SemType::Disease;
  if (s == "Symptom") return SemType::Symptom;
  if (s == "Treatment") return SemType::Treatment;
  throw DataError("unknown semantic type: " + s);
}

void ConceptLexicon::add(const std::string& phrase, const textprep::StopwordSet& stopwords,
                         const std::string& concept_id, SemType sem_type) {
  textprep::TokenSequence tokens = textprep::preprocess_keep_short(phrase, stopwords);
  if (tokens.empty())
    throw DataError("lexicon phrase normalizes to nothing: \"" + phrase + "\"");
  std::string key = join_tokens(tokens, 0, tokens.size());
  auto& entries = phrases_[key];
  for (const ConceptEntry& e : entries)
    if (e.sem_type == sem_type)
      throw DataError("duplicate lexicon phrase: \"" + phrase + "\" (" +
                      to_string(sem_type) + ")");
  entries.push_back(ConceptEntry{concept_id, sem_type});
  ++entry_count_;
  max_len_ = std::max(max_len_, static_cast<int>(tokens.size()));
}

ConceptSet ConceptLexicon::extract(const textprep::TokenSequence& tokens) const {
  ConceptSet out;
  std::size_t i = 0;
  while (i < tokens.size()) {
    std::size_t longest = 0;
    const std::vector<ConceptEntry>* hits = nullptr;
    const std::size_t cap = std::min<std::size_t>(max_len_, tokens.size() - i);
    for (std::size_t len = 1; len <= cap; ++len) {
      auto it = phrases_.find(join_tokens(tokens, i, len));
      if (it != phrases_.end()) {
        longest = len;
        hits = &it->second;
      }
    }
    if (hits) {
      for (const ConceptEntry& e : *hits) {
        switch (e.sem_type) {
          case SemType::Disease: out.diseases.insert(e.concept_id); break;
          case SemType::Symptom: out.symptoms.insert(e.concept_id); break;
          case SemType::Treatment: out.treatments.insert(e.concept_id); break;
        }
      }
      i += longest;
    } else {
      ++i;
    }
  }
  return out;
}

ConceptLexicon load_lexicon(const std::string& path, const textprep::StopwordSet& stopwords) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open lexicon file: " + path);
  ConceptLexicon lex;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    const auto tab1 = line.find('\t');
    const auto tab2 = tab1 == std::string::npos ? std::string::npos : line.find('\t', tab1 + 1);
    if (tab2 == std::string::npos)
      throw DataError(path + " line " + std::to_string(line_no) +
                      ": expected three tab-separated fields");
    const std::string phrase = line.substr(0, tab1);
    const std::string concept_id = line.substr(tab1 + 1, tab2 - tab1 - 1);
    std::string sem = line.substr(tab2 + 1);
    if (const auto extra = sem.find('\t'); extra != std::string::npos) sem.resize(extra);
    if (concept_id.empty())
      throw DataError(path + " line " + std::to_string(line_no) + ": empty concept id");
    try {
      lex.add(phrase, stopwords, concept_id, parse_sem_type(sem));
    } catch (const DataError& e) {
      throw DataError(path + " line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  if (lex.size() == 0) throw DataError("lexicon file has no entries: " + path);
  return lex;
}

double jaccard(const std::set<std::string>& a, const std::set<std::string>& b) {
  if (a.empty() && b.empty()) return 0.0;
  std::size_t inter = 0;
  for (const auto& x : a) inter += b.count(x);
  const std::size_t uni = a.size() + b.size() - inter;
  return static_cast<double>(inter) / static_cast<double>(uni);
}

}  // namespace medforum::concepts
