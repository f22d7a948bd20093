#include "medforum/metrics.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <set>
#include <tuple>

#include "medforum/util.hpp"

namespace medforum::metrics {

namespace {

void check_labels(const std::vector<int>& gold, const std::vector<int>& pred) {
  if (gold.size() != pred.size())
    throw DataError("label vectors differ in length: " + std::to_string(gold.size()) +
                    " vs " + std::to_string(pred.size()));
  if (gold.empty()) throw DataError("label vectors are empty");
  for (int v : gold)
    if (v < 0 || v >= kNumClasses) throw DataError("gold label out of range");
  for (int v : pred)
    if (v < 0 || v >= kNumClasses) throw DataError("predicted label out of range");
}

ConfusionMatrix build_confusion(const std::vector<int>& gold, const std::vector<int>& pred) {
  ConfusionMatrix m;
  for (std::size_t i = 0; i < gold.size(); ++i) ++m.counts[gold[i]][pred[i]];
  return m;
}

}  // namespace

long ConfusionMatrix::total() const {
  long n = 0;
  for (const auto& row : counts)
    for (long c : row) n += c;
  return n;
}

long ConfusionMatrix::diagonal() const {
  long n = 0;
  for (int i = 0; i < kNumClasses; ++i) n += counts[i][i];
  return n;
}

ClassificationReport classification_report(const std::vector<int>& gold,
                                           const std::vector<int>& pred) {
  check_labels(gold, pred);
  ClassificationReport rep;
  rep.confusion = build_confusion(gold, pred);
  const long n = rep.confusion.total();
  rep.accuracy = static_cast<double>(rep.confusion.diagonal()) / n;
  for (int c = 0; c < kNumClasses; ++c) {
    long tp = rep.confusion.counts[c][c];
    long pred_c = 0, gold_c = 0;
    for (int o = 0; o < kNumClasses; ++o) {
      pred_c += rep.confusion.counts[o][c];
      gold_c += rep.confusion.counts[c][o];
    }
    rep.precision[c] = pred_c > 0 ? static_cast<double>(tp) / pred_c : 0.0;
    rep.recall[c] = gold_c > 0 ? static_cast<double>(tp) / gold_c : 0.0;
    const double pr = rep.precision[c] + rep.recall[c];
    rep.f1[c] = pr > 0.0 ? 2.0 * rep.precision[c] * rep.recall[c] / pr : 0.0;
    rep.macro_precision += rep.precision[c];
    rep.macro_recall += rep.recall[c];
    rep.macro_f1 += rep.f1[c];
  }
  rep.macro_precision /= kNumClasses;
  rep.macro_recall /= kNumClasses;
  rep.macro_f1 /= kNumClasses;
  return rep;
}

double cohen_kappa(const std::vector<int>& gold, const std::vector<int>& pred) {
  check_labels(gold, pred);
  const ConfusionMatrix m = build_confusion(gold, pred);
  const double n = static_cast<double>(m.total());
  const double po = m.diagonal() / n;
  double pe = 0.0;
  for (int c = 0; c < kNumClasses; ++c) {
    long gold_c = 0, pred_c = 0;
    for (int o = 0; o < kNumClasses; ++o) {
      gold_c += m.counts[c][o];
      pred_c += m.counts[o][c];
    }
    pe += (gold_c / n) * (pred_c / n);
  }
  if (pe >= 1.0) return 0.0;
  return (po - pe) / (1.0 - pe);
}

double regularized_incomplete_beta(double a, double b, double x) {
  if (a <= 0.0 || b <= 0.0) throw DataError("incomplete beta requires positive shape parameters");
  if (x <= 0.0) return 0.0;
  if (x >= 1.0) return 1.0;
  // Symmetry keeps the continued fraction in its fast-converging region.
  if (x > (a + 1.0) / (a + b + 2.0))
    return 1.0 - regularized_incomplete_beta(b, a, 1.0 - x);

  const double log_beta = std::lgamma(a) + std::lgamma(b) - std::lgamma(a + b);
  const double front = std::exp(a * std::log(x) + b * std::log1p(-x) - log_beta) / a;

  // Modified Lentz evaluation of the standard continued fraction.
  constexpr double kTiny = 1e-30;
  double f = 1.0, c = 1.0, d = 0.0;
  for (int i = 0; i <= 400; ++i) {
    const int m = i / 2;
    double num;
    if (i == 0)
      num = 1.0;
    else if (i % 2 == 0)
      num = m * (b - m) * x / ((a + 2.0 * m - 1.0) * (a + 2.0 * m));
    else
      num = -(a + m) * (a + b + m) * x / ((a + 2.0 * m) * (a + 2.0 * m + 1.0));
    d = 1.0 + num * d;
    if (std::fabs(d) < kTiny) d = kTiny;
    d = 1.0 / d;
    c = 1.0 + num / c;
    if (std::fabs(c) < kTiny) c = kTiny;
    f *= c * d;
    if (std::fabs(1.0 - c * d) < 1e-12) break;
  }
  return front * (f - 1.0);
}

Correlation pearson_with_p(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size())
    throw DataError("correlation inputs differ in length");
  const std::size_t n = x.size();
  if (n < 3) throw DataError("correlation requires at least 3 observations");
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double sxx = 0.0, syy = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double dx = x[i] - mx, dy = y[i] - my;
    sxx += dx * dx;
    syy += dy * dy;
    sxy += dx * dy;
  }
  if (sxx == 0.0 || syy == 0.0)
    throw DataError("correlation undefined for zero-variance input");

  Correlation out;
  out.r = sxy / std::sqrt(sxx * syy);
  out.r = std::clamp(out.r, -1.0, 1.0);
  const double df = static_cast<double>(n - 2);
  if (std::fabs(out.r) >= 1.0) {
    out.p = 0.0;
    return out;
  }
  const double t2 = out.r * out.r * df / (1.0 - out.r * out.r);
  out.p = regularized_incomplete_beta(df / 2.0, 0.5, df / (df + t2));
  return out;
}

std::vector<RelevanceJudgment> load_judgments(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open judgment file: " + path);
  std::vector<RelevanceJudgment> out;
  std::set<std::tuple<std::string, std::string, std::string>> seen;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    std::array<std::string, 4> fields;
    std::size_t start = 0;
    for (int f = 0; f < 4; ++f) {
      const auto tab = line.find('\t', start);
      if (f < 3 && tab == std::string::npos)
        throw DataError(path + " line " + std::to_string(line_no) +
                        ": expected four tab-separated fields");
      fields[f] = line.substr(start, tab == std::string::npos ? std::string::npos : tab - start);
      start = tab + 1;
    }
    RelevanceJudgment j;
    j.query_id = fields[0];
    j.retrieved_id = fields[1];
    j.annotator_id = fields[3];
    if (j.query_id.empty() || j.retrieved_id.empty() || j.annotator_id.empty())
      throw DataError(path + " line " + std::to_string(line_no) + ": empty field");
    const char* first = fields[2].data();
    const char* last = first + fields[2].size();
    auto [ptr, ec] = std::from_chars(first, last, j.rating);
    if (ec != std::errc() || ptr != last)
      throw DataError(path + " line " + std::to_string(line_no) +
                      ": rating is not an integer: " + fields[2]);
    if (j.rating < 1 || j.rating > 5)
      throw DataError(path + " line " + std::to_string(line_no) +
                      ": rating must be in 1..5, got " + fields[2]);
    if (!seen.emplace(j.query_id, j.retrieved_id, j.annotator_id).second)
      throw DataError(path + " line " + std::to_string(line_no) +
                      ": duplicate judgment for (" + j.query_id + ", " + j.retrieved_id +
                      ") by annotator " + j.annotator_id);
    out.push_back(std::move(j));
  }
  return out;
}

std::map<std::string, double> median_ratings(const std::vector<RelevanceJudgment>& judgments) {
  std::map<std::string, std::vector<double>> by_id;
  for (const auto& j : judgments) by_id[j.retrieved_id].push_back(j.rating);
  std::map<std::string, double> out;
  for (auto& [id, ratings] : by_id) {
    std::sort(ratings.begin(), ratings.end());
    const std::size_t n = ratings.size();
    out[id] = n % 2 ? ratings[n / 2] : 0.5 * (ratings[n / 2 - 1] + ratings[n / 2]);
  }
  return out;
}

double precision_at_k(const std::vector<std::string>& ranked_ids,
                      const std::vector<RelevanceJudgment>& judgments, int k,
                      double relevance_threshold) {
  if (k < 1) throw DataError("precision@k requires k >= 1");
  const std::map<std::string, double> medians = median_ratings(judgments);
  int relevant = 0, judged = 0;
  const int upto = std::min<int>(k, static_cast<int>(ranked_ids.size()));
  for (int i = 0; i < upto; ++i) {
    const auto it = medians.find(ranked_ids[i]);
    if (it == medians.end()) continue;
    ++judged;
    if (it->second >= relevance_threshold) ++relevant;
  }
  if (judged == 0)
    throw DataError("no judged items among the top " + std::to_string(k) + " ranked ids");
  return static_cast<double>(relevant) / k;
}

double dcg_at_k(const std::vector<double>& ratings_in_rank_order, int k) {
  if (k < 1) throw DataError("DCG requires k >= 1");
  double dcg = 0.0;
  const int upto = std::min<int>(k, static_cast<int>(ratings_in_rank_order.size()));
  for (int i = 0; i < upto; ++i) {
    const double rel = ratings_in_rank_order[i] - 1.0;
    dcg += rel / std::log2(i + 2.0);
  }
  return dcg;
}

double krippendorff_alpha(const std::vector<std::vector<double>>& ratings_by_item,
                          AgreementLevel level) {
  // Collect the distinct values actually used, then build the coincidence
  // matrix over items with at least two ratings.
  std::vector<double> values;
  int usable_items = 0;
  for (const auto& item : ratings_by_item) {
    if (item.size() < 2) continue;
    ++usable_items;
    for (double v : item) values.push_back(v);
  }
  if (usable_items < 2)
    throw DataError("agreement requires at least 2 items rated by at least 2 annotators");
  std::sort(values.begin(), values.end());
  values.erase(std::unique(values.begin(), values.end()), values.end());
  const std::size_t V = values.size();
  auto index_of = [&](double v) {
    return static_cast<std::size_t>(
        std::lower_bound(values.begin(), values.end(), v) - values.begin());
  };

  std::vector<double> coin(V * V, 0.0);
  for (const auto& item : ratings_by_item) {
    const std::size_t m = item.size();
    if (m < 2) continue;
    const double w = 1.0 / static_cast<double>(m - 1);
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t j = 0; j < m; ++j) {
        if (i == j) continue;
        coin[index_of(item[i]) * V + index_of(item[j])] += w;
      }
  }

  std::vector<double> marginal(V, 0.0);
  double n = 0.0;
  for (std::size_t c = 0; c < V; ++c) {
    for (std::size_t k = 0; k < V; ++k) marginal[c] += coin[c * V + k];
    n += marginal[c];
  }

  std::vector<double> delta2(V * V, 0.0);
  for (std::size_t c = 0; c < V; ++c) {
    for (std::size_t k = 0; k < V; ++k) {
      if (level == AgreementLevel::Interval) {
        const double d = values[c] - values[k];
        delta2[c * V + k] = d * d;
      } else {
        // Ordinal distance: cumulative marginals between the two values,
        // with the endpoints counted half.
        if (c == k) continue;
        const std::size_t lo = std::min(c, k), hi = std::max(c, k);
        double cum = 0.0;
        for (std::size_t g = lo; g <= hi; ++g) cum += marginal[g];
        cum -= 0.5 * (marginal[lo] + marginal[hi]);
        delta2[c * V + k] = cum * cum;
      }
    }
  }

  double d_obs = 0.0, d_exp = 0.0;
  for (std::size_t c = 0; c < V; ++c)
    for (std::size_t k = 0; k < V; ++k) {
      d_obs += coin[c * V + k] * delta2[c * V + k];
      d_exp += marginal[c] * marginal[k] * delta2[c * V + k];
    }
  d_exp /= (n - 1.0);
  if (d_exp == 0.0) return 1.0;  // every rating identical: perfect agreement
  return 1.0 - d_obs / d_exp;
}

}  // namespace medforum::metrics
