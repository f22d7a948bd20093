#pragma once

#include <array>
#include <map>
#include <string>
#include <vector>

// Evaluation statistics: classification quality, rank quality, correlation
// with significance, and inter-annotator agreement. Everything here is a
// pure function over plain values; class labels are integers in [0, 3).

namespace medforum::metrics {

constexpr int kNumClasses = 3;

struct ConfusionMatrix {
  // counts[gold][predicted]
  std::array<std::array<long, kNumClasses>, kNumClasses> counts{};

  long total() const;
  long diagonal() const;
};

struct ClassificationReport {
  ConfusionMatrix confusion;
  double accuracy = 0.0;
  std::array<double, kNumClasses> precision{}, recall{}, f1{};
  double macro_precision = 0.0, macro_recall = 0.0, macro_f1 = 0.0;
};

// Macro metrics are unweighted means over classes; a per-class metric whose
// denominator is zero counts as 0.
ClassificationReport classification_report(const std::vector<int>& gold,
                                           const std::vector<int>& pred);

// (p_o - p_e) / (1 - p_e); defined as 0 when p_e = 1.
double cohen_kappa(const std::vector<int>& gold, const std::vector<int>& pred);

struct Correlation {
  double r = 0.0;
  double p = 1.0;  // two-tailed, from the t-distribution with n-2 df
};

Correlation pearson_with_p(const std::vector<double>& x, const std::vector<double>& y);

// Continued-fraction evaluation of I_x(a, b); exposed because the p-value
// path above leans on it and it deserves direct tests.
double regularized_incomplete_beta(double a, double b, double x);

struct RelevanceJudgment {
  std::string query_id;
  std::string retrieved_id;
  int rating = 0;  // 1..5
  std::string annotator_id;
};

// TSV: query_id, retrieved_id, rating, annotator_id. '#' comments and blank
// lines are skipped; out-of-range ratings and duplicate
// (query, retrieved, annotator) triples are errors with line numbers.
std::vector<RelevanceJudgment> load_judgments(const std::string& path);

// Median rating per retrieved id over the given judgments (pre-filtered to
// one query); even counts average the middle pair.
std::map<std::string, double> median_ratings(const std::vector<RelevanceJudgment>& judgments);

// Fraction of the top-k ranked ids whose median rating clears the
// threshold. The denominator is k even when fewer ids are ranked or judged;
// unjudged ids count as non-relevant. No judged id in the top k is an error.
double precision_at_k(const std::vector<std::string>& ranked_ids,
                      const std::vector<RelevanceJudgment>& judgments, int k,
                      double relevance_threshold = 4.0);

// Ratings arrive in rank order on the 1-5 scale; relevance is rating - 1.
// Sums rel_i / log2(i + 1) over the first k (or all, if fewer).
double dcg_at_k(const std::vector<double>& ratings_in_rank_order, int k);

enum class AgreementLevel { Interval, Ordinal };

// One inner vector per item, holding that item's ratings from whichever
// annotators judged it (identity does not matter for the coincidence
// computation). Items rated fewer than two times are ignored; fewer than
// two usable items is an error. Zero expected disagreement means every
// rating everywhere is identical and yields 1.
double krippendorff_alpha(const std::vector<std::vector<double>>& ratings_by_item,
                          AgreementLevel level = AgreementLevel::Interval);

}  // namespace medforum::metrics
