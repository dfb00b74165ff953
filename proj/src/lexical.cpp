#include "embir/lexical.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <unordered_set>

#include "embir/errors.hpp"

namespace embir {

void BM25Params::validate() const {
  if (!(k1 >= 0.0)) throw ConfigError("bm25 k1 must be >= 0");
  if (!(b >= 0.0 && b <= 1.0)) throw ConfigError("bm25 b must be in [0, 1]");
}

void QLParams::validate() const {
  if (!(mu > 0.0)) throw ConfigError("ql mu must be > 0");
}

std::string_view to_string(Scorer s) { return s == Scorer::ql ? "ql" : "bm25"; }

Scorer parse_scorer(std::string_view name) {
  if (name == "bm25") return Scorer::bm25;
  if (name == "ql") return Scorer::ql;
  throw ConfigError("unknown scorer '" + std::string(name) + "' (expected bm25|ql)");
}

std::string_view to_string(BooleanMode m) { return m == BooleanMode::max_clause ? "max-clause" : "union"; }

BooleanMode parse_boolean_mode(std::string_view name) {
  if (name == "union") return BooleanMode::union_terms;
  if (name == "max-clause" || name == "max_clause") return BooleanMode::max_clause;
  throw ConfigError("unknown boolean mode '" + std::string(name) + "' (expected union|max-clause)");
}

double bm25_idf(std::uint64_t num_docs, std::uint64_t df) {
  const auto n = static_cast<double>(num_docs);
  const auto d = static_cast<double>(df);
  return std::log(1.0 + (n - d + 0.5) / (d + 0.5));
}

namespace {

// Distinct in-vocabulary term ids, ascending. A fixed summation order keeps
// scores bit-identical however the query terms are ordered.
std::vector<TermId> resolve_terms(std::span<const std::string> query, const Index& index) {
  std::vector<TermId> ids;
  for (const auto& t : query) {
    if (const auto id = index.term_id(t)) ids.push_back(*id);
  }
  std::sort(ids.begin(), ids.end());
  ids.erase(std::unique(ids.begin(), ids.end()), ids.end());
  return ids;
}

// Dense per-document accumulator restricted to matched documents.
struct Accumulator {
  explicit Accumulator(std::size_t n) : score(n, 0.0), matched(n, 0) {}

  void mark(DocOrdinal d) {
    if (!matched[d]) {
      matched[d] = 1;
      docs.push_back(d);
    }
  }

  std::vector<double> score;
  std::vector<char> matched;
  std::vector<DocOrdinal> docs;
};

Ranking top_k(const Index& index, const std::vector<DocOrdinal>& docs, const std::vector<double>& score,
              std::size_t k) {
  Ranking out;
  out.reserve(docs.size());
  for (const DocOrdinal d : docs) out.push_back({index.doc_id(d), score[d]});
  const auto cmp = [](const ScoredDoc& a, const ScoredDoc& b) {
    if (a.score != b.score) return a.score > b.score;
    return a.doc_id < b.doc_id;
  };
  if (out.size() > k) {
    std::partial_sort(out.begin(), out.begin() + static_cast<std::ptrdiff_t>(k), out.end(), cmp);
    out.resize(k);
  } else {
    std::sort(out.begin(), out.end(), cmp);
  }
  return out;
}

void check_depth(std::size_t k) {
  if (k == 0) throw ConfigError("result depth k must be >= 1");
}

void bm25_accumulate(const std::vector<TermId>& terms, const Index& index, const BM25Params& params, Accumulator& acc) {
  const double avg = index.avg_doc_len();
  for (const TermId t : terms) {
    const double idf = bm25_idf(index.num_docs(), index.df(t));
    for (const Posting& p : index.postings(t)) {
      const double tf = p.tf;
      const double norm = params.k1 * (1.0 - params.b + params.b * index.doc_length(p.doc) / avg);
      acc.score[p.doc] += idf * tf * (params.k1 + 1.0) / (tf + norm);
      acc.mark(p.doc);
    }
  }
}

void ql_accumulate(const std::vector<TermId>& terms, const Index& index, const QLParams& params, Accumulator& acc) {
  for (const TermId t : terms) {
    for (const Posting& p : index.postings(t)) acc.mark(p.doc);
  }
  std::sort(acc.docs.begin(), acc.docs.end());
  const auto total = static_cast<double>(index.total_tokens());
  for (const TermId t : terms) {
    const double background = params.mu * static_cast<double>(index.cf(t)) / total;
    const auto list = index.postings(t);
    auto it = list.begin();
    for (const DocOrdinal d : acc.docs) {
      while (it != list.end() && it->doc < d) ++it;
      const double tf = (it != list.end() && it->doc == d) ? it->tf : 0.0;
      acc.score[d] += std::log((tf + background) / (index.doc_length(d) + params.mu));
    }
  }
}

Ranking score_ids(const std::vector<TermId>& terms, const Index& index, const ScorerParams& params, std::size_t k) {
  if (terms.empty() || index.num_docs() == 0) return {};
  Accumulator acc(index.num_docs());
  if (params.scorer == Scorer::bm25) {
    bm25_accumulate(terms, index, params.bm25, acc);
  } else {
    ql_accumulate(terms, index, params.ql, acc);
  }
  return top_k(index, acc.docs, acc.score, k);
}

}  // namespace

Ranking score_bm25(std::span<const std::string> query, const Index& index, const BM25Params& params, std::size_t k) {
  ScorerParams sp;
  sp.scorer = Scorer::bm25;
  sp.bm25 = params;
  return score_terms(query, index, sp, k);
}

Ranking score_ql(std::span<const std::string> query, const Index& index, const QLParams& params, std::size_t k) {
  ScorerParams sp;
  sp.scorer = Scorer::ql;
  sp.ql = params;
  return score_terms(query, index, sp, k);
}

Ranking score_terms(std::span<const std::string> query, const Index& index, const ScorerParams& params,
                    std::size_t k) {
  check_depth(k);
  params.validate();
  return score_ids(resolve_terms(query, index), index, params, k);
}

// --- boolean queries ---------------------------------------------------------

BooleanQuery::BooleanQuery(std::vector<std::vector<std::string>> clauses) {
  if (clauses.empty()) throw ConfigError("boolean query needs at least one clause");
  std::set<std::vector<std::string>> seen;
  for (auto& c : clauses) {
    if (c.empty()) throw ConfigError("boolean query clause must contain at least one term");
    if (seen.insert(c).second) clauses_.push_back(std::move(c));
  }
}

std::vector<std::string> BooleanQuery::union_terms() const {
  std::vector<std::string> out;
  std::unordered_set<std::string> seen;
  for (const auto& c : clauses_) {
    for (const auto& t : c) {
      if (seen.insert(t).second) out.push_back(t);
    }
  }
  return out;
}

Ranking execute_boolean(const BooleanQuery& query, const Index& index, const ScorerParams& params, std::size_t k,
                        BooleanMode mode) {
  check_depth(k);
  params.validate();
  if (mode == BooleanMode::union_terms || query.size() == 1) {
    return score_ids(resolve_terms(query.union_terms(), index), index, params, k);
  }
  std::vector<double> best(index.num_docs(), 0.0);
  std::vector<char> seen(index.num_docs(), 0);
  std::vector<DocOrdinal> docs;
  for (const auto& clause : query.clauses()) {
    const auto ids = resolve_terms(clause, index);
    if (ids.empty()) continue;
    Accumulator acc(index.num_docs());
    if (params.scorer == Scorer::bm25) {
      bm25_accumulate(ids, index, params.bm25, acc);
    } else {
      ql_accumulate(ids, index, params.ql, acc);
    }
    for (const DocOrdinal d : acc.docs) {
      if (!seen[d]) {
        seen[d] = 1;
        best[d] = acc.score[d];
        docs.push_back(d);
      } else {
        best[d] = std::max(best[d], acc.score[d]);
      }
    }
  }
  return top_k(index, docs, best, k);
}

}  // namespace embir
