#include "medforum/corpus.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>
#include <unordered_set>

#include <json.hpp>

#include "medforum/binio.hpp"

namespace medforum::corpus {

namespace {

constexpr char kStoreMagic[4] = {'M', 'F', 'R', '1'};
constexpr std::uint32_t kStoreVersion = 1;

}  // namespace

const char* to_string(Segment s) {
  switch (s) {
    case Segment::MedicalCondition: return "MedicalCondition";
    case Segment::Medication: return "Medication";
    case Segment::Unlabeled: return "Unlabeled";
  }
  return "?";
}

const char* to_string(SourceLabel l) {
  switch (l) {
    case SourceLabel::Exist: return "Exist";
    case SourceLabel::Recover: return "Recover";
    case SourceLabel::Deteriorate: return "Deteriorate";
    case SourceLabel::Effective: return "Effective";
    case SourceLabel::Ineffective: return "Ineffective";
    case SourceLabel::SeriousAdverseEffect: return "SeriousAdverseEffect";
  }
  return "?";
}

const char* to_string(Sentiment s) {
  switch (s) {
    case Sentiment::Positive: return "Positive";
    case Sentiment::Neutral: return "Neutral";
    case Sentiment::Negative: return "Negative";
  }
  return "?";
}

Segment parse_segment(const std::string& s) {
  if (s == "MedicalCondition") return Segment::MedicalCondition;
  if (s == "Medication") return Segment::Medication;
  if (s == "Unlabeled") return Segment::Unlabeled;
  throw DataError("unknown segment \"" + s + "\"");
}

SourceLabel parse_source_label(const std::string& s) {
  if (s == "Exist") return SourceLabel::Exist;
  if (s == "Recover") return SourceLabel::Recover;
  if (s == "Deteriorate") return SourceLabel::Deteriorate;
  if (s == "Effective") return SourceLabel::Effective;
  if (s == "Ineffective") return SourceLabel::Ineffective;
  if (s == "SeriousAdverseEffect") return SourceLabel::SeriousAdverseEffect;
  throw DataError("unknown source label \"" + s + "\"");
}

Sentiment parse_sentiment(const std::string& s) {
  if (s == "Positive") return Sentiment::Positive;
  if (s == "Neutral") return Sentiment::Neutral;
  if (s == "Negative") return Sentiment::Negative;
  throw DataError("unknown sentiment \"" + s + "\"");
}

Sentiment map_taxonomy(SourceLabel label) {
  switch (label) {
    case SourceLabel::Exist: return Sentiment::Neutral;
    case SourceLabel::Recover: return Sentiment::Positive;
    case SourceLabel::Deteriorate: return Sentiment::Negative;
    case SourceLabel::Effective: return Sentiment::Positive;
    case SourceLabel::Ineffective: return Sentiment::Neutral;
    case SourceLabel::SeriousAdverseEffect: return Sentiment::Negative;
  }
  throw DataError("unmapped source label");
}

const ForumPost* Corpus::find(const std::string& id) const {
  for (const auto& p : posts)
    if (p.id == id) return &p;
  return nullptr;
}

ForumPost parse_record_json(const std::string& line, std::size_t line_no) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(line);
  } catch (const nlohmann::json::parse_error& e) {
    throw DataError("line " + std::to_string(line_no) + ": invalid JSON: " + e.what());
  }
  auto fail = [&](const std::string& msg) -> DataError {
    return DataError("line " + std::to_string(line_no) + ": " + msg);
  };
  if (!j.is_object()) throw fail("record is not a JSON object");
  if (!j.contains("id") || !j["id"].is_string()) throw fail("missing string field \"id\"");
  if (!j.contains("text") || !j["text"].is_string()) throw fail("missing string field \"text\"");

  ForumPost post;
  post.id = j["id"].get<std::string>();
  post.text = j["text"].get<std::string>();
  if (post.id.empty()) throw fail("empty id");

  try {
    if (j.contains("segment")) {
      if (!j["segment"].is_string()) throw fail("\"segment\" is not a string");
      post.segment = parse_segment(j["segment"].get<std::string>());
    }
    if (j.contains("label")) {
      if (!j["label"].is_string()) throw fail("\"label\" is not a string");
      const std::string label = j["label"].get<std::string>();
      // A record may carry a source label (mapped) or a sentiment directly.
      if (label == "Positive" || label == "Neutral" || label == "Negative") {
        post.sentiment = parse_sentiment(label);
      } else {
        post.source_label = parse_source_label(label);
        post.sentiment = map_taxonomy(*post.source_label);
      }
    }
  } catch (const DataError& e) {
    throw fail(e.what());
  }
  return post;
}

void recompute_histogram(Corpus& c) {
  c.class_histogram = {};
  for (const auto& p : c.posts)
    if (p.sentiment) ++c.class_histogram[static_cast<int>(*p.sentiment)];
}

Corpus ingest(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw DataError("cannot open corpus file: " + path);

  Corpus c;
  std::unordered_set<std::string> seen_ids;
  std::unordered_set<std::string> seen_texts;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(is, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    ForumPost post = parse_record_json(line, line_no);
    if (!seen_ids.insert(post.id).second)
      throw DataError("line " + std::to_string(line_no) + ": duplicate id \"" + post.id + "\"");
    // Duplicate texts collapse to the first occurrence. The key is the text
    // with whitespace runs collapsed; the pipeline strips non-ASCII later, so
    // no further normalization is applied here.
    if (!seen_texts.insert(util::collapse_whitespace(post.text)).second) continue;
    c.posts.push_back(std::move(post));
  }
  recompute_histogram(c);
  return c;
}

FoldSplit stratified_kfold(const Corpus& c, int k, std::uint64_t seed) {
  if (k < 2) throw DataError("k must be >= 2, got " + std::to_string(k));

  std::array<std::vector<std::size_t>, kNumSentiments> by_class;
  for (std::size_t i = 0; i < c.posts.size(); ++i)
    if (c.posts[i].sentiment)
      by_class[static_cast<int>(*c.posts[i].sentiment)].push_back(i);

  for (int s = 0; s < kNumSentiments; ++s) {
    if (!by_class[s].empty() && by_class[s].size() < static_cast<std::size_t>(k))
      throw DataError(std::string("class ") + to_string(static_cast<Sentiment>(s)) +
                      " has " + std::to_string(by_class[s].size()) +
                      " posts, fewer than k=" + std::to_string(k));
  }

  FoldSplit split;
  split.k = k;
  util::Rng rng(seed);
  // Deal each class round-robin, carrying the fold position across classes so
  // total fold sizes also stay within one of each other.
  std::size_t pos = 0;
  for (int s = 0; s < kNumSentiments; ++s) {
    auto indices = by_class[s];
    rng.shuffle(indices);
    for (std::size_t idx : indices) {
      split.assignments[c.posts[idx].id] = static_cast<int>(pos % k);
      ++pos;
    }
  }
  return split;
}

namespace {

void write_post(std::ostream& os, const ForumPost& p) {
  std::ostringstream rec;
  binio::write_string(rec, p.id);
  binio::write_string(rec, p.text);
  binio::write_u8(rec, static_cast<std::uint8_t>(p.segment));
  binio::write_u8(rec, p.source_label ? 1 : 0);
  if (p.source_label) binio::write_u8(rec, static_cast<std::uint8_t>(*p.source_label));
  binio::write_u8(rec, p.sentiment ? 1 : 0);
  if (p.sentiment) binio::write_u8(rec, static_cast<std::uint8_t>(*p.sentiment));
  const std::string payload = rec.str();
  binio::write_u32(os, static_cast<std::uint32_t>(payload.size()));
  os.write(payload.data(), static_cast<std::streamsize>(payload.size()));
}

ForumPost read_post(std::istream& is) {
  const std::uint32_t len = binio::read_u32(is, "record length");
  std::string payload(len, '\0');
  if (len > 0 && !is.read(payload.data(), len))
    throw DataError("truncated corpus store record");
  std::istringstream rec(payload);
  ForumPost p;
  p.id = binio::read_string(rec, "post id");
  p.text = binio::read_string(rec, "post text");
  const auto seg = binio::read_u8(rec, "segment");
  if (seg > 2) throw DataError("corrupt corpus store: bad segment value");
  p.segment = static_cast<Segment>(seg);
  if (binio::read_u8(rec, "source label flag")) {
    const auto v = binio::read_u8(rec, "source label");
    if (v > 5) throw DataError("corrupt corpus store: bad source label value");
    p.source_label = static_cast<SourceLabel>(v);
  }
  if (binio::read_u8(rec, "sentiment flag")) {
    const auto v = binio::read_u8(rec, "sentiment");
    if (v > 2) throw DataError("corrupt corpus store: bad sentiment value");
    p.sentiment = static_cast<Sentiment>(v);
  }
  return p;
}

}  // namespace

void save_store(const Corpus& c, const std::string& path) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw DataError("cannot open store for writing: " + path);
  os.write(kStoreMagic, 4);
  binio::write_u32(os, kStoreVersion);
  binio::write_u64(os, c.posts.size());
  for (const auto& p : c.posts) write_post(os, p);
  if (!os) throw DataError("write failure on store: " + path);
}

Corpus load_store(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw DataError("cannot open store: " + path);
  char magic[4];
  if (!is.read(magic, 4) || std::memcmp(magic, kStoreMagic, 4) != 0)
    throw DataError("not a corpus store (bad magic): " + path);
  const std::uint32_t version = binio::read_u32(is, "store version");
  if (version != kStoreVersion)
    throw DataError("corpus store version mismatch: file has " + std::to_string(version) +
                    ", expected " + std::to_string(kStoreVersion));
  const std::uint64_t count = binio::read_u64(is, "post count");
  Corpus c;
  c.posts.reserve(count);
  for (std::uint64_t i = 0; i < count; ++i) c.posts.push_back(read_post(is));
  recompute_histogram(c);
  return c;
}

}  // namespace medforum::corpus
