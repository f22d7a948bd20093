#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "medforum/util.hpp"

namespace medforum::corpus {

// Which part of the source forum the post came from.
enum class Segment { MedicalCondition, Medication, Unlabeled };

// Labels used by the source dataset, before mapping onto the generic taxonomy.
enum class SourceLabel {
  Exist,
  Recover,
  Deteriorate,
  Effective,
  Ineffective,
  SeriousAdverseEffect,
};

// Generic medical-sentiment taxonomy. The numeric order doubles as the
// deterministic tie-break order for classifier predictions.
enum class Sentiment { Positive = 0, Neutral = 1, Negative = 2 };

inline constexpr int kNumSentiments = 3;

const char* to_string(Segment s);
const char* to_string(SourceLabel l);
const char* to_string(Sentiment s);

Segment parse_segment(const std::string& s);
SourceLabel parse_source_label(const std::string& s);
Sentiment parse_sentiment(const std::string& s);

// Maps a source segment label onto the generic sentiment taxonomy.
Sentiment map_taxonomy(SourceLabel label);

struct ForumPost {
  std::string id;
  std::string text;
  Segment segment = Segment::Unlabeled;
  std::optional<SourceLabel> source_label;
  std::optional<Sentiment> sentiment;

  bool operator==(const ForumPost&) const = default;
};

struct Corpus {
  std::vector<ForumPost> posts;
  // Counts of labeled posts per sentiment, indexed by Sentiment value.
  std::array<std::size_t, kNumSentiments> class_histogram{};

  std::size_t labeled_count() const {
    return class_histogram[0] + class_histogram[1] + class_histogram[2];
  }
  const ForumPost* find(const std::string& id) const;

  bool operator==(const Corpus&) const = default;
};

struct FoldSplit {
  int k = 0;
  std::unordered_map<std::string, int> assignments;  // post id -> fold index
};

// Reads a line-delimited JSON corpus file. Each line is an object with keys
// `id`, `text` and optional `segment`, `label`. `label` may be a source
// label (mapped via the taxonomy) or a sentiment name given directly.
// Duplicate texts (after whitespace normalization) collapse to the first
// occurrence; duplicate ids are an error.
Corpus ingest(const std::string& path);

// Parses one corpus record (exposed for reuse by the store loader and tests).
ForumPost parse_record_json(const std::string& line, std::size_t line_no);

// Recomputes the class histogram from the posts.
void recompute_histogram(Corpus& c);

// Stratified k-fold assignment over the labeled posts. Deterministic for a
// fixed seed; per-class counts in each fold differ from an even split by at
// most one, and so do total fold sizes.
FoldSplit stratified_kfold(const Corpus& c, int k, std::uint64_t seed);

// Binary store, magic "MFR1". Round trips a corpus field-for-field.
void save_store(const Corpus& c, const std::string& path);
Corpus load_store(const std::string& path);

}  // namespace medforum::corpus
