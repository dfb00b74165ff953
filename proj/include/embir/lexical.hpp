#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "embir/index.hpp"
#include "embir/run.hpp"

namespace embir {

struct BM25Params {
  double k1 = 0.9;
  double b = 0.4;

  void validate() const;
};

/// Dirichlet-smoothed query likelihood.
struct QLParams {
  double mu = 1000.0;

  void validate() const;
};

enum class Scorer { bm25, ql };

std::string_view to_string(Scorer s);
Scorer parse_scorer(std::string_view name);

struct ScorerParams {
  Scorer scorer = Scorer::bm25;
  BM25Params bm25;
  QLParams ql;

  void validate() const { bm25.validate(), ql.validate(); }
};

/// ln(1 + (N - df + 0.5) / (df + 0.5))
double bm25_idf(std::uint64_t num_docs, std::uint64_t df);

/// Ranks documents matching at least one query term. The query is a set:
/// repeated terms count once. Out-of-vocabulary terms are ignored.
/// Returns at most k results.
Ranking score_bm25(std::span<const std::string> query, const Index& index, const BM25Params& params, std::size_t k);
Ranking score_ql(std::span<const std::string> query, const Index& index, const QLParams& params, std::size_t k);
Ranking score_terms(std::span<const std::string> query, const Index& index, const ScorerParams& params,
                    std::size_t k);

/// Disjunction of clauses; the first clause is the original query.
class BooleanQuery {
 public:
  /// Throws ConfigError on zero clauses or an empty clause. Duplicate
  /// clauses are dropped, keeping the first occurrence.
  explicit BooleanQuery(std::vector<std::vector<std::string>> clauses);

  const std::vector<std::vector<std::string>>& clauses() const { return clauses_; }
  std::size_t size() const { return clauses_.size(); }
  const std::vector<std::string>& original() const { return clauses_.front(); }
  /// Distinct terms over all clauses in first-appearance order.
  std::vector<std::string> union_terms() const;

  bool operator==(const BooleanQuery&) const = default;

 private:
  std::vector<std::vector<std::string>> clauses_;
};

enum class BooleanMode { union_terms, max_clause };

std::string_view to_string(BooleanMode m);
BooleanMode parse_boolean_mode(std::string_view name);

/// union_terms: score the deduplicated union of clause terms once.
/// max_clause: score each clause separately and keep each doc's best clause score.
Ranking execute_boolean(const BooleanQuery& query, const Index& index, const ScorerParams& params, std::size_t k,
                        BooleanMode mode = BooleanMode::union_terms);

}  // namespace embir
