#include "medforum/suggestion.hpp"

#include <algorithm>

#include "medforum/util.hpp"

namespace medforum::suggestion {

PairStats build_pair_stats(const retrieval::PreparedCorpus& pc) {
  std::vector<std::string> unclassified;
  for (const auto& post : pc.posts)
    if (!post.sentiment) unclassified.push_back(post.id);
  if (!unclassified.empty()) {
    std::string ids;
    for (const auto& id : unclassified) {
      if (!ids.empty()) ids += ", ";
      ids += id;
    }
    throw DataError("pair statistics need classified posts; unclassified: " + ids);
  }

  PairStats stats;
  for (const auto& post : pc.posts) {
    const bool positive = *post.sentiment == corpus::Sentiment::Positive;
    for (const auto& t : post.cset.treatments) {
      for (const auto& d : post.cset.diseases) {
        PairCounts& pc_entry = stats.counts[{t, d}];
        ++pc_entry.total;
        if (positive) ++pc_entry.positive;
      }
    }
  }
  return stats;
}

double pr_positive(const PairStats& stats, const std::string& treatment,
                   const std::string& disease, double alpha) {
  if (alpha < 0.0) throw DataError("smoothing alpha must be >= 0");
  const auto it = stats.counts.find({treatment, disease});
  if (it == stats.counts.end()) return 0.0;
  return (it->second.positive + alpha) / (it->second.total + 2.0 * alpha);
}

SuggestionResult suggest(const retrieval::PreparedPost& query,
                         const retrieval::PreparedCorpus& pc, const PairStats& stats,
                         const SuggestionConfig& cfg) {
  if (cfg.tau < 0.0) throw DataError("tau must be >= 0");
  if (cfg.alpha < 0.0) throw DataError("smoothing alpha must be >= 0");
  if (cfg.max_per_disease < 1) throw DataError("max suggestions per disease must be >= 1");
  if (query.cset.diseases.empty())
    throw DataError("query post mentions no diseases; symptom-only queries are not supported");

  // Best similarity per treatment over the posts that mention it, with the
  // realizing post id (ties toward the smaller id via corpus order + strict
  // improvement).
  struct Evidence {
    double sim = -1.0;
    std::string post_id;
  };
  std::map<std::string, Evidence> best_for_treatment;
  for (const auto& post : pc.posts) {
    if (post.id == query.id) continue;
    if (post.cset.treatments.empty()) continue;
    const double sim = retrieval::overall_similarity(post, query).sim;
    for (const auto& t : post.cset.treatments) {
      Evidence& ev = best_for_treatment[t];
      if (sim > ev.sim || (sim == ev.sim && (ev.post_id.empty() || post.id < ev.post_id))) {
        ev.sim = sim;
        ev.post_id = post.id;
      }
    }
  }

  SuggestionResult res;
  res.query_id = query.id;
  for (const auto& disease : query.cset.diseases) {
    std::vector<Suggestion> local;
    for (const auto& [key, counts] : stats.counts) {
      if (key.second != disease) continue;
      const auto ev = best_for_treatment.find(key.first);
      if (ev == best_for_treatment.end()) continue;
      const double pr = pr_positive(stats, key.first, disease, cfg.alpha);
      const double g = ev->second.sim * pr;
      if (pr <= 0.0 || g <= 0.0 || g < cfg.tau) continue;
      Suggestion s;
      s.disease = disease;
      s.treatment = key.first;
      s.evidence_post_id = ev->second.post_id;
      s.sim = ev->second.sim;
      s.pr = pr;
      s.g = g;
      local.push_back(std::move(s));
    }
    std::sort(local.begin(), local.end(), [](const Suggestion& a, const Suggestion& b) {
      if (a.g != b.g) return a.g > b.g;
      return a.treatment < b.treatment;
    });
    if (local.size() > static_cast<std::size_t>(cfg.max_per_disease))
      local.resize(cfg.max_per_disease);
    for (auto& s : local) res.items.push_back(std::move(s));
  }

  std::sort(res.items.begin(), res.items.end(), [](const Suggestion& a, const Suggestion& b) {
    if (a.g != b.g) return a.g > b.g;
    if (a.disease != b.disease) return a.disease < b.disease;
    return a.treatment < b.treatment;
  });
  return res;
}

}  // namespace medforum::suggestion
