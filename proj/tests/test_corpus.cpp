#include <doctest.h>

#include <algorithm>
#include <array>
#include <map>
#include <string>

#include "helpers.hpp"
#include "medforum/corpus.hpp"

using namespace medforum;
using namespace medforum::corpus;

TEST_CASE("source labels map onto the three-class taxonomy") {
  const std::array<std::pair<SourceLabel, Sentiment>, 6> table = {{
      {SourceLabel::Exist, Sentiment::Neutral},
      {SourceLabel::Recover, Sentiment::Positive},
      {SourceLabel::Deteriorate, Sentiment::Negative},
      {SourceLabel::Effective, Sentiment::Positive},
      {SourceLabel::Ineffective, Sentiment::Neutral},
      {SourceLabel::SeriousAdverseEffect, Sentiment::Negative},
  }};
  for (const auto& [label, expected] : table) {
    CAPTURE(to_string(label));
    CHECK(map_taxonomy(label) == expected);
    // String round trip through the parser hits the same mapping.
    CHECK(map_taxonomy(parse_source_label(to_string(label))) == expected);
  }
}

TEST_CASE("record parsing") {
  SUBCASE("source label is mapped, raw label retained") {
    const auto p = parse_record_json(
        R"({"id":"p1","text":"I feel fine","segment":"MedicalCondition","label":"Recover"})", 1);
    CHECK(p.id == "p1");
    CHECK(p.text == "I feel fine");
    CHECK(p.segment == Segment::MedicalCondition);
    REQUIRE(p.source_label.has_value());
    CHECK(*p.source_label == SourceLabel::Recover);
    REQUIRE(p.sentiment.has_value());
    CHECK(*p.sentiment == Sentiment::Positive);
  }
  SUBCASE("direct sentiment label") {
    const auto p = parse_record_json(R"({"id":"p2","text":"t","label":"Negative"})", 1);
    CHECK_FALSE(p.source_label.has_value());
    CHECK(*p.sentiment == Sentiment::Negative);
  }
  SUBCASE("unlabeled post") {
    const auto p = parse_record_json(R"({"id":"p3","text":"t"})", 1);
    CHECK_FALSE(p.sentiment.has_value());
    CHECK(p.segment == Segment::Unlabeled);
  }
  SUBCASE("errors carry the line number") {
    CHECK_THROWS_WITH_AS(parse_record_json("not json", 7),
                         doctest::Contains("line 7"), DataError);
    CHECK_THROWS_WITH_AS(parse_record_json(R"({"text":"x"})", 3),
                         doctest::Contains("line 3"), DataError);
    CHECK_THROWS_AS(parse_record_json(R"({"id":"a","text":"x","label":"Meh"})", 1), DataError);
    CHECK_THROWS_AS(parse_record_json(R"({"id":"","text":"x"})", 1), DataError);
  }
}

namespace {

std::string jsonl_line(const std::string& id, const std::string& text,
                       const std::string& label = "") {
  std::string line = R"({"id":")" + id + R"(","text":")" + text + R"(")";
  if (!label.empty()) line += R"(,"label":")" + label + R"(")";
  return line + "}\n";
}

}  // namespace

TEST_CASE("ingest deduplicates texts and counts classes") {
  std::string body;
  for (int i = 0; i < 8; ++i)
    body += jsonl_line("p" + std::to_string(i), "unique text number " + std::to_string(i),
                       i % 2 ? "Effective" : "Exist");
  // Two whitespace-variant duplicates of p0's text; the first occurrence wins.
  body += jsonl_line("dup1", "unique   text number\\t0");  // JSON \t escape: a real tab
  body += jsonl_line("dup2", " unique text number 0 ");
  const auto path = testutil::write_temp("ingest_dedup.jsonl", body);

  const Corpus c = ingest(path.string());
  CHECK(c.posts.size() == 8);
  CHECK(c.find("dup1") == nullptr);
  CHECK(c.find("p0") != nullptr);
  CHECK(c.class_histogram[static_cast<int>(Sentiment::Positive)] == 4);
  CHECK(c.class_histogram[static_cast<int>(Sentiment::Neutral)] == 4);
  CHECK(c.class_histogram[static_cast<int>(Sentiment::Negative)] == 0);
  CHECK(c.labeled_count() == 8);
}

TEST_CASE("ingest rejects duplicate ids with the line number") {
  const std::string body = jsonl_line("p1", "alpha") + jsonl_line("p1", "beta");
  const auto path = testutil::write_temp("ingest_dupid.jsonl", body);
  CHECK_THROWS_WITH_AS(ingest(path.string()), doctest::Contains("line 2"), DataError);
}

TEST_CASE("ingest skips blank lines") {
  const std::string body = jsonl_line("p1", "alpha") + "\n   \n" + jsonl_line("p2", "beta");
  const auto path = testutil::write_temp("ingest_blank.jsonl", body);
  CHECK(ingest(path.string()).posts.size() == 2);
}

namespace {

Corpus synthetic_corpus(int n_pos, int n_neu, int n_neg) {
  Corpus c;
  auto add = [&](int n, Sentiment s, const char* prefix) {
    for (int i = 0; i < n; ++i) {
      ForumPost p;
      p.id = std::string(prefix) + std::to_string(i);
      p.text = std::string(prefix) + " post " + std::to_string(i);
      p.sentiment = s;
      c.posts.push_back(std::move(p));
    }
  };
  add(n_pos, Sentiment::Positive, "pos");
  add(n_neu, Sentiment::Neutral, "neu");
  add(n_neg, Sentiment::Negative, "neg");
  recompute_histogram(c);
  return c;
}

}  // namespace

TEST_CASE("stratified k-fold balances every class across folds") {
  const Corpus c = synthetic_corpus(40, 30, 30);
  const FoldSplit split = stratified_kfold(c, 5, 42);
  REQUIRE(split.k == 5);
  REQUIRE(split.assignments.size() == 100);

  // fold -> class -> count
  std::map<int, std::array<int, 3>> counts;
  for (const auto& post : c.posts) {
    const int fold = split.assignments.at(post.id);
    REQUIRE(fold >= 0);
    REQUIRE(fold < 5);
    counts[fold][static_cast<int>(*post.sentiment)]++;
  }
  REQUIRE(counts.size() == 5);
  for (const auto& [fold, per_class] : counts) {
    CAPTURE(fold);
    CHECK(per_class[static_cast<int>(Sentiment::Positive)] == 8);
    CHECK(per_class[static_cast<int>(Sentiment::Neutral)] == 6);
    CHECK(per_class[static_cast<int>(Sentiment::Negative)] == 6);
  }
}

TEST_CASE("stratified k-fold keeps fold sizes within one even when classes are uneven") {
  const Corpus c = synthetic_corpus(13, 7, 5);
  const FoldSplit split = stratified_kfold(c, 4, 9);
  std::array<int, 4> sizes{};
  for (const auto& [id, fold] : split.assignments) sizes[fold]++;
  const auto [lo, hi] = std::minmax_element(sizes.begin(), sizes.end());
  CHECK(*hi - *lo <= 1);
}

TEST_CASE("stratified k-fold rejects bad k and thin classes") {
  const Corpus c = synthetic_corpus(10, 10, 10);
  CHECK_THROWS_AS(stratified_kfold(c, 1, 1), DataError);
  CHECK_THROWS_AS(stratified_kfold(c, 0, 1), DataError);
  const Corpus thin = synthetic_corpus(10, 10, 3);
  CHECK_THROWS_WITH_AS(stratified_kfold(thin, 5, 1), doctest::Contains("Negative"), DataError);
}

TEST_CASE("stratified k-fold is deterministic in the seed") {
  const Corpus c = synthetic_corpus(20, 20, 20);
  const FoldSplit a = stratified_kfold(c, 5, 123);
  const FoldSplit b = stratified_kfold(c, 5, 123);
  CHECK(a.assignments == b.assignments);
  const FoldSplit other = stratified_kfold(c, 5, 124);
  CHECK(a.assignments != other.assignments);
}

TEST_CASE("corpus store round trips field for field") {
  Corpus c = synthetic_corpus(3, 2, 1);
  c.posts[0].segment = Segment::Medication;
  c.posts[1].source_label = SourceLabel::Ineffective;
  ForumPost unlabeled;
  unlabeled.id = "u1";
  unlabeled.text = "no label here";
  c.posts.push_back(unlabeled);
  recompute_histogram(c);

  const auto path = testutil::write_temp("store_roundtrip.bin", "");
  save_store(c, path.string());
  const Corpus back = load_store(path.string());
  CHECK(back == c);
}

TEST_CASE("corpus store rejects damage") {
  const Corpus c = synthetic_corpus(2, 2, 2);
  const auto path = testutil::write_temp("store_damage.bin", "");
  save_store(c, path.string());
  const std::string bytes = testutil::read_file(path);

  SUBCASE("truncation") {
    const auto cut = testutil::write_temp("store_cut.bin", bytes.substr(0, bytes.size() - 5));
    CHECK_THROWS_AS(load_store(cut.string()), DataError);
  }
  SUBCASE("bad magic") {
    std::string mangled = bytes;
    mangled[0] = 'X';
    const auto bad = testutil::write_temp("store_badmagic.bin", mangled);
    CHECK_THROWS_WITH_AS(load_store(bad.string()), doctest::Contains("magic"), DataError);
  }
}
