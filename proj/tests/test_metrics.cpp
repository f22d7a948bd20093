#include <doctest.h>

#include <cmath>
#include <string>
#include <vector>

#include "helpers.hpp"
#include "medforum/metrics.hpp"
#include "medforum/util.hpp"

using namespace medforum;
using namespace medforum::metrics;

TEST_CASE("classification report on perfect predictions") {
  const std::vector<int> gold = {0, 1, 2, 0, 1, 2};
  const ClassificationReport rep = classification_report(gold, gold);
  CHECK(rep.accuracy == doctest::Approx(1.0));
  CHECK(rep.macro_precision == doctest::Approx(1.0));
  CHECK(rep.macro_recall == doctest::Approx(1.0));
  CHECK(rep.macro_f1 == doctest::Approx(1.0));
  CHECK(rep.confusion.diagonal() == 6);
  CHECK(rep.confusion.total() == 6);
}

TEST_CASE("classification report on a worked example") {
  // gold: P P N N, pred: P N N P (classes 0 and 2).
  const std::vector<int> gold = {0, 0, 2, 2};
  const std::vector<int> pred = {0, 2, 2, 0};
  const ClassificationReport rep = classification_report(gold, pred);
  CHECK(rep.accuracy == doctest::Approx(0.5));
  // Class 0: precision 1/2, recall 1/2. Class 2: precision 1/2, recall 1/2.
  CHECK(rep.precision[0] == doctest::Approx(0.5));
  CHECK(rep.recall[0] == doctest::Approx(0.5));
  CHECK(rep.f1[0] == doctest::Approx(0.5));
  // Class 1 never appears: all three metrics are defined as 0.
  CHECK(rep.precision[1] == 0.0);
  CHECK(rep.recall[1] == 0.0);
  CHECK(rep.f1[1] == 0.0);
  CHECK(rep.macro_f1 == doctest::Approx((0.5 + 0.0 + 0.5) / 3));
  CHECK(rep.confusion.counts[0][2] == 1);
  CHECK(rep.confusion.counts[2][0] == 1);
}

TEST_CASE("accuracy equals the diagonal fraction on random labelings") {
  util::Rng rng(42);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<int> gold(30), pred(30);
    for (auto& g : gold) g = static_cast<int>(rng.below(3));
    for (auto& p : pred) p = static_cast<int>(rng.below(3));
    const ClassificationReport rep = classification_report(gold, pred);
    CHECK(rep.accuracy ==
          doctest::Approx(static_cast<double>(rep.confusion.diagonal()) / rep.confusion.total()));
  }
}

TEST_CASE("classification report rejects bad input") {
  CHECK_THROWS_AS(classification_report({}, {}), DataError);
  CHECK_THROWS_AS(classification_report({0, 1}, {0}), DataError);
  CHECK_THROWS_AS(classification_report({0, 3}, {0, 0}), DataError);
  CHECK_THROWS_AS(classification_report({0, -1}, {0, 0}), DataError);
}

TEST_CASE("kappa is one for perfect agreement") {
  const std::vector<int> gold = {0, 1, 2, 0, 1, 2, 1};
  CHECK(cohen_kappa(gold, gold) == doctest::Approx(1.0));
}

TEST_CASE("kappa is zero when prediction carries no information") {
  // Constant prediction: observed agreement equals chance agreement.
  const std::vector<int> gold = {0, 0, 1, 1};
  const std::vector<int> pred = {0, 0, 0, 0};
  CHECK(cohen_kappa(gold, pred) == doctest::Approx(0.0));
}

TEST_CASE("kappa handles the degenerate all-same case") {
  // Both raters constant and equal: p_e = 1, defined as 0.
  const std::vector<int> gold = {1, 1, 1};
  CHECK(cohen_kappa(gold, gold) == 0.0);
}

TEST_CASE("kappa is negative for systematic disagreement") {
  const std::vector<int> gold = {0, 0, 1, 1};
  const std::vector<int> pred = {1, 1, 0, 0};
  CHECK(cohen_kappa(gold, pred) < 0.0);
}

TEST_CASE("pearson correlation with significance") {
  SUBCASE("perfect linear relation") {
    const std::vector<double> x = {1, 2, 3, 4, 5};
    const std::vector<double> y = {2, 4, 6, 8, 10};
    const Correlation c = pearson_with_p(x, y);
    CHECK(c.r == doctest::Approx(1.0));
    CHECK(c.p == 0.0);
  }
  SUBCASE("perfect inverse relation") {
    const std::vector<double> x = {1, 2, 3};
    const std::vector<double> y = {3, 2, 1};
    const Correlation c = pearson_with_p(x, y);
    CHECK(c.r == doctest::Approx(-1.0));
    CHECK(c.p == 0.0);
  }
  SUBCASE("zero correlation gives p of one") {
    // Symmetric tent: r is exactly 0, so t = 0 and p = 1.
    const std::vector<double> x = {1, 2, 3, 4, 5, 6, 7, 8, 9, 10};
    const std::vector<double> y = {1, 2, 3, 4, 5, 5, 4, 3, 2, 1};
    const Correlation c = pearson_with_p(x, y);
    CHECK(c.r == doctest::Approx(0.0));
    CHECK(c.p == doctest::Approx(1.0));
  }
  SUBCASE("affine transforms leave r unchanged") {
    util::Rng rng(9);
    std::vector<double> x(12), y(12);
    for (std::size_t i = 0; i < x.size(); ++i) {
      x[i] = rng.uniform(0.0, 1.0);
      y[i] = 0.4 * x[i] + rng.uniform(0.0, 0.3);
    }
    const Correlation base = pearson_with_p(x, y);
    std::vector<double> y2 = y;
    for (auto& v : y2) v = 5.0 * v - 7.0;
    const Correlation scaled = pearson_with_p(x, y2);
    CHECK(base.r == doctest::Approx(scaled.r));
    CHECK(base.p == doctest::Approx(scaled.p));
  }
  SUBCASE("a worked mid-strength value") {
    // r = 10 / sqrt(148), which lands t at exactly 2.5 with 3 degrees of
    // freedom; the two-tailed p there is 0.0877066 (verified offline).
    const std::vector<double> x = {1, 2, 3, 4, 5};
    const std::vector<double> y = {2, 1, 4, 3, 6};
    const Correlation c = pearson_with_p(x, y);
    CHECK(c.r == doctest::Approx(10.0 / std::sqrt(148.0)).epsilon(1e-12));
    CHECK(c.p == doctest::Approx(0.0877066470).epsilon(1e-6));
  }
  SUBCASE("degenerate inputs are rejected") {
    CHECK_THROWS_AS(pearson_with_p({1, 2}, {1, 2}), DataError);
    CHECK_THROWS_AS(pearson_with_p({1, 2, 3}, {1, 2}), DataError);
    CHECK_THROWS_AS(pearson_with_p({1, 1, 1}, {1, 2, 3}), DataError);
    CHECK_THROWS_AS(pearson_with_p({1, 2, 3}, {4, 4, 4}), DataError);
  }
}

TEST_CASE("regularized incomplete beta matches reference values") {
  // I_x(a, b) reference points computed from the symmetry and halving
  // identities: I_0.5(1, 1) = 0.5; I_x(1, b) = 1 - (1-x)^b; I_x(a, 1) = x^a.
  CHECK(regularized_incomplete_beta(1, 1, 0.5) == doctest::Approx(0.5));
  CHECK(regularized_incomplete_beta(1, 3, 0.25) == doctest::Approx(1 - std::pow(0.75, 3)));
  CHECK(regularized_incomplete_beta(4, 1, 0.8) == doctest::Approx(std::pow(0.8, 4)));
  CHECK(regularized_incomplete_beta(2.5, 3.5, 0.0) == 0.0);
  CHECK(regularized_incomplete_beta(2.5, 3.5, 1.0) == 1.0);
  // Symmetry: I_x(a,b) = 1 - I_{1-x}(b,a).
  const double lhs = regularized_incomplete_beta(2.0, 5.0, 0.3);
  const double rhs = 1.0 - regularized_incomplete_beta(5.0, 2.0, 0.7);
  CHECK(lhs == doctest::Approx(rhs).epsilon(1e-12));
}

TEST_CASE("judgment files load and validate") {
  SUBCASE("well formed") {
    const auto path = testutil::write_temp("judg_ok.tsv",
                                           "# query retrieved rating annotator\n"
                                           "q1\tp1\t5\ta1\n"
                                           "q1\tp1\t4\ta2\n"
                                           "\n"
                                           "q1\tp2\t2\ta1\r\n");
    const auto js = load_judgments(path.string());
    REQUIRE(js.size() == 3);
    CHECK(js[0].query_id == "q1");
    CHECK(js[0].retrieved_id == "p1");
    CHECK(js[0].rating == 5);
    CHECK(js[0].annotator_id == "a1");
  }
  SUBCASE("field count errors carry line numbers") {
    const auto path = testutil::write_temp("judg_fields.tsv", "q1\tp1\t5\n");
    CHECK_THROWS_WITH_AS(load_judgments(path.string()), doctest::Contains("line 1"), DataError);
  }
  SUBCASE("out-of-range ratings are rejected") {
    const auto path = testutil::write_temp("judg_range.tsv", "q1\tp1\t6\ta1\n");
    CHECK_THROWS_WITH_AS(load_judgments(path.string()), doctest::Contains("line 1"), DataError);
    const auto path0 = testutil::write_temp("judg_zero.tsv", "q1\tp1\t0\ta1\n");
    CHECK_THROWS_AS(load_judgments(path0.string()), DataError);
  }
  SUBCASE("duplicate triples are rejected") {
    const auto path = testutil::write_temp("judg_dup.tsv", "q1\tp1\t5\ta1\nq1\tp1\t3\ta1\n");
    CHECK_THROWS_WITH_AS(load_judgments(path.string()), doctest::Contains("line 2"), DataError);
  }
}

TEST_CASE("median ratings") {
  std::vector<RelevanceJudgment> js = {
      {"q", "p1", 5, "a1"}, {"q", "p1", 3, "a2"}, {"q", "p1", 4, "a3"},
      {"q", "p2", 2, "a1"}, {"q", "p2", 5, "a2"},
  };
  const auto med = median_ratings(js);
  CHECK(med.at("p1") == doctest::Approx(4.0));
  CHECK(med.at("p2") == doctest::Approx(3.5));  // even count averages the middle pair
}

TEST_CASE("precision at k") {
  // Three of the top five clear the threshold.
  std::vector<RelevanceJudgment> js = {
      {"q", "p1", 5, "a"}, {"q", "p2", 4, "a"}, {"q", "p3", 2, "a"},
      {"q", "p4", 5, "a"}, {"q", "p5", 1, "a"},
  };
  const std::vector<std::string> ranked = {"p1", "p2", "p3", "p4", "p5"};
  CHECK(precision_at_k(ranked, js, 5) == doctest::Approx(0.6));

  SUBCASE("all relevant") {
    std::vector<RelevanceJudgment> all5;
    for (int i = 1; i <= 5; ++i)
      all5.push_back({"q", "p" + std::to_string(i), 5, "a"});
    CHECK(precision_at_k(ranked, all5, 5) == doctest::Approx(1.0));
  }
  SUBCASE("unjudged ranked ids count as non-relevant") {
    const std::vector<std::string> with_unjudged = {"p1", "mystery", "p2"};
    CHECK(precision_at_k(with_unjudged, js, 3) == doctest::Approx(2.0 / 3.0));
  }
  SUBCASE("the denominator stays k when fewer ids are ranked") {
    CHECK(precision_at_k({"p1", "p4"}, js, 5) == doctest::Approx(0.4));
  }
  SUBCASE("no judged id in the top k is an error") {
    CHECK_THROWS_AS(precision_at_k({"x", "y"}, js, 2), DataError);
  }
  SUBCASE("k must be positive") {
    CHECK_THROWS_AS(precision_at_k(ranked, js, 0), DataError);
  }
  SUBCASE("a custom threshold changes what counts") {
    CHECK(precision_at_k(ranked, js, 5, 2.0) == doctest::Approx(0.8));
  }
}

TEST_CASE("dcg at five on the ideal ranking") {
  // Ratings 5,4,3,2,1 -> gains 4,3,2,1,0 over log2(2..6):
  // 4/1 + 3/1.58496 + 2/2 + 1/2.32193 + 0 = 7.32347.
  const std::vector<double> ratings = {5, 4, 3, 2, 1};
  CHECK(dcg_at_k(ratings, 5) == doctest::Approx(7.32347).epsilon(1e-4));
}

TEST_CASE("dcg basics") {
  CHECK(dcg_at_k({1, 1, 1}, 3) == 0.0);          // rating 1 is zero gain
  CHECK(dcg_at_k({5}, 1) == doctest::Approx(4.0));
  CHECK(dcg_at_k({5, 5, 5}, 1) == doctest::Approx(4.0));  // k truncates
  CHECK(dcg_at_k({}, 5) == 0.0);                 // nothing ranked, nothing gained
  CHECK_THROWS_AS(dcg_at_k({5}, 0), DataError);
}

TEST_CASE("swapping a better item downward never raises dcg") {
  const std::vector<double> good = {5, 4, 2};
  const std::vector<double> worse = {2, 4, 5};
  CHECK(dcg_at_k(good, 3) > dcg_at_k(worse, 3));
}

TEST_CASE("krippendorff alpha is one for unanimous annotators") {
  const std::vector<std::vector<double>> items = {
      {4, 4, 4}, {2, 2, 2}, {5, 5, 5}, {1, 1, 1}};
  CHECK(krippendorff_alpha(items, AgreementLevel::Interval) == doctest::Approx(1.0));
  CHECK(krippendorff_alpha(items, AgreementLevel::Ordinal) == doctest::Approx(1.0));
}

TEST_CASE("krippendorff alpha on a worked example") {
  // Two annotators, four items; computed by hand from the coincidence
  // matrix. Interval: D_o = 4/8, D_e = 224/56, alpha = 1 - 0.5/4 = 0.875.
  // Ordinal: D_o = 16/8, D_e = 608/56, alpha = 31/38.
  const std::vector<std::vector<double>> items = {{1, 2}, {2, 2}, {4, 4}, {5, 4}};
  CHECK(krippendorff_alpha(items, AgreementLevel::Interval) == doctest::Approx(0.875));
  CHECK(krippendorff_alpha(items, AgreementLevel::Ordinal) ==
        doctest::Approx(31.0 / 38.0).epsilon(1e-12));
}

TEST_CASE("krippendorff alpha near zero for independent random annotators") {
  util::Rng rng(1234);
  std::vector<std::vector<double>> items;
  for (int i = 0; i < 4000; ++i) {
    items.push_back({static_cast<double>(1 + rng.below(5)),
                     static_cast<double>(1 + rng.below(5)),
                     static_cast<double>(1 + rng.below(5))});
  }
  const double a = krippendorff_alpha(items, AgreementLevel::Interval);
  CHECK(std::abs(a) < 0.05);
}

TEST_CASE("krippendorff alpha skips singleton items and validates") {
  // Items with a single rating contribute nothing.
  const std::vector<std::vector<double>> items = {{3}, {4, 4}, {2, 2}, {5}};
  CHECK(krippendorff_alpha(items) == doctest::Approx(1.0));
  CHECK_THROWS_AS(krippendorff_alpha({{1, 2}}, AgreementLevel::Interval), DataError);
  CHECK_THROWS_AS(krippendorff_alpha({{3}, {4}}, AgreementLevel::Interval), DataError);
  CHECK_THROWS_AS(krippendorff_alpha({}, AgreementLevel::Interval), DataError);
}

TEST_CASE("ordinal alpha differs from interval alpha when categories are skewed") {
  const std::vector<std::vector<double>> items = {
      {1, 2}, {2, 1}, {1, 1}, {2, 2}, {5, 1}, {1, 5}, {2, 2}, {1, 1}};
  const double interval = krippendorff_alpha(items, AgreementLevel::Interval);
  const double ordinal = krippendorff_alpha(items, AgreementLevel::Ordinal);
  CHECK(interval != doctest::Approx(ordinal));
}
