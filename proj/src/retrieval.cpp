#include "medforum/retrieval.hpp"

#include <algorithm>
#include <thread>

#include "medforum/util.hpp"

namespace medforum::retrieval {

const PreparedPost* PreparedCorpus::find(const std::string& id) const {
  for (const auto& p : posts)
    if (p.id == id) return &p;
  return nullptr;
}

PreparedPost prepare_post(const corpus::ForumPost& post, const textprep::StopwordSet& stopwords,
                          const concepts::ConceptLexicon& lexicon,
                          const embeddings::EmbeddingTable& table) {
  PreparedPost out;
  out.id = post.id;
  out.sentiment = post.sentiment;
  const textprep::TokenSequence tokens = textprep::preprocess(post.text, stopwords);
  out.cset = lexicon.extract(tokens);
  out.dvec = embeddings::doc_vector(tokens, table);
  return out;
}

PreparedCorpus prepare(const corpus::Corpus& c, const textprep::StopwordSet& stopwords,
                       const concepts::ConceptLexicon& lexicon,
                       const embeddings::EmbeddingTable& table, int threads) {
  PreparedCorpus pc;
  pc.posts.resize(c.posts.size());
  if (threads < 1) threads = 1;
  auto work = [&](std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i)
      pc.posts[i] = prepare_post(c.posts[i], stopwords, lexicon, table);
  };
  if (threads == 1 || c.posts.size() < 2) {
    work(0, c.posts.size());
  } else {
    const std::size_t n = c.posts.size();
    const std::size_t chunk = (n + threads - 1) / threads;
    std::vector<std::thread> pool;
    for (std::size_t begin = 0; begin < n; begin += chunk)
      pool.emplace_back(work, begin, std::min(n, begin + chunk));
    for (auto& t : pool) t.join();
  }
  return pc;
}

double disease_similarity(const concepts::ConceptSet& p, const concepts::ConceptSet& q) {
  return concepts::jaccard(p.diseases, q.diseases);
}

double symptom_similarity(const concepts::ConceptSet& p, const concepts::ConceptSet& q) {
  return concepts::jaccard(p.symptoms, q.symptoms);
}

SimilarityBreakdown overall_similarity(const PreparedPost& p, const PreparedPost& q) {
  SimilarityBreakdown b;
  b.ds = disease_similarity(p.cset, q.cset);
  b.ss = symptom_similarity(p.cset, q.cset);
  b.ts = std::max(0.0, embeddings::cosine(p.dvec.values, q.dvec.values));
  b.misim = (2.0 * b.ds + b.ss) / 3.0;
  b.sim = (2.0 * b.misim + b.ts) / 3.0;
  return b;
}

std::string to_string(Mode m) { return m == Mode::Full ? "full" : "text-only"; }

Mode parse_mode(const std::string& s) {
  if (s == "full") return Mode::Full;
  if (s == "text-only" || s == "text_only") return Mode::TextOnly;
  throw DataError("unknown retrieval mode: " + s + " (expected full or text-only)");
}

RetrievalResult top_n(const PreparedPost& query, const PreparedCorpus& pc, int n,
                      Mode mode, int threads) {
  if (n < 1) throw DataError("top_n requires n >= 1");
  if (threads < 1) threads = 1;

  RetrievalResult res;
  res.query_id = query.id;
  res.n = n;
  res.mode = mode;

  std::vector<RankedPost> scored(pc.posts.size());
  std::vector<std::uint8_t> keep(pc.posts.size(), 0);
  auto work = [&](std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) {
      const PreparedPost& cand = pc.posts[i];
      if (cand.id == query.id) continue;
      scored[i].post_id = cand.id;
      scored[i].breakdown = overall_similarity(cand, query);
      keep[i] = 1;
    }
  };
  if (threads == 1 || pc.posts.size() < 2) {
    work(0, pc.posts.size());
  } else {
    const std::size_t total = pc.posts.size();
    const std::size_t chunk = (total + threads - 1) / threads;
    std::vector<std::thread> pool;
    for (std::size_t begin = 0; begin < total; begin += chunk)
      pool.emplace_back(work, begin, std::min(total, begin + chunk));
    for (auto& t : pool) t.join();
  }

  res.ranked.reserve(pc.posts.size());
  for (std::size_t i = 0; i < scored.size(); ++i)
    if (keep[i]) res.ranked.push_back(std::move(scored[i]));

  const auto key = [mode](const RankedPost& r) {
    return mode == Mode::Full ? r.breakdown.sim : r.breakdown.ts;
  };
  std::sort(res.ranked.begin(), res.ranked.end(),
            [&key](const RankedPost& a, const RankedPost& b) {
              const double ka = key(a), kb = key(b);
              if (ka != kb) return ka > kb;
              return a.post_id < b.post_id;
            });
  if (res.ranked.size() > static_cast<std::size_t>(n)) res.ranked.resize(n);
  return res;
}

}  // namespace medforum::retrieval
