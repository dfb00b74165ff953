#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "embir/embeddings.hpp"
#include "embir/lexical.hpp"
#include "embir/pipeline.hpp"

namespace embir {

struct ExpansionConfig {
  /// Minimum cosine (exclusive) for a neighbor to become a substitute.
  double t = 0.75;
  std::size_t neighbors_per_term = 1;
  /// Cap on clauses generated beyond the original query.
  std::size_t max_alternatives = 64;

  void validate() const;
};

/// Substitutes for each query position: E(q) = neighbors above the
/// threshold, empty for out-of-vocabulary terms.
std::vector<std::vector<Neighbor>> expansion_candidates(std::span<const std::string> query,
                                                        const EmbeddingStore& store, const ExpansionConfig& config);

/// Builds the boolean query from per-position substitutes: the original
/// query first, then every substitution combination ordered by number of
/// substitutions, then substituted positions left to right, then candidate
/// rank (best cosine first). Stops after `max_alternatives` alternatives.
BooleanQuery assemble_alternatives(std::span<const std::string> query,
                                   const std::vector<std::vector<Neighbor>>& candidates,
                                   std::size_t max_alternatives);

/// Query Q becomes "Q OR A1 OR A2 ..." where each Ai substitutes some terms
/// with their embedding-space nearest neighbors. Throws ConfigError on an
/// empty query.
BooleanQuery expand_query(std::span<const std::string> query, const EmbeddingStore& store,
                          const ExpansionConfig& config);

struct ExpansionRunOptions {
  ExpansionConfig expansion;
  ScorerParams scorer;
  BooleanMode mode = BooleanMode::union_terms;
  std::size_t depth = 1000;
  std::string tag = "embir-expand";
  TopicField field = TopicField::title;
  unsigned threads = 1;
};

/// analyze title -> expand_query -> execute_boolean, per topic.
PipelineResult run_expansion_pipeline(std::span<const Topic> topics, const Index& index, const EmbeddingStore& store,
                                      const ExpansionRunOptions& options);

}  // namespace embir
