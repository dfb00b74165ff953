#include "embir/expansion.hpp"

#include <fmt/format.h>

#include "embir/errors.hpp"

namespace embir {

void ExpansionConfig::validate() const {
  if (!(t >= -1.0 && t <= 1.0)) throw ConfigError("expansion threshold t must be in [-1, 1]");
  if (neighbors_per_term < 1) throw ConfigError("neighbors per term must be >= 1");
  if (max_alternatives < 1) throw ConfigError("max alternatives must be >= 1");
}

std::vector<std::vector<Neighbor>> expansion_candidates(std::span<const std::string> query,
                                                        const EmbeddingStore& store, const ExpansionConfig& config) {
  std::vector<std::vector<Neighbor>> out(query.size());
  for (std::size_t i = 0; i < query.size(); ++i) {
    if (auto nn = store.nearest_neighbors(query[i], config.neighbors_per_term, config.t)) out[i] = std::move(*nn);
  }
  return out;
}

namespace {

// Advances `subset` (strictly increasing indices into [0, n)) to the next
// combination in lexicographic order. Returns false after the last one.
bool next_combination(std::vector<std::size_t>& subset, std::size_t n) {
  const std::size_t k = subset.size();
  for (std::size_t i = k; i-- > 0;) {
    if (subset[i] < n - k + i) {
      ++subset[i];
      for (std::size_t j = i + 1; j < k; ++j) subset[j] = subset[j - 1] + 1;
      return true;
    }
  }
  return false;
}

}  // namespace

BooleanQuery assemble_alternatives(std::span<const std::string> query,
                                   const std::vector<std::vector<Neighbor>>& candidates,
                                   std::size_t max_alternatives) {
  if (query.empty()) throw ConfigError("cannot expand an empty query");
  if (candidates.size() != query.size()) throw ConfigError("one candidate list per query term is required");

  std::vector<std::size_t> expandable;
  for (std::size_t i = 0; i < query.size(); ++i) {
    if (!candidates[i].empty()) expandable.push_back(i);
  }

  const std::vector<std::string> original(query.begin(), query.end());
  std::vector<std::vector<std::string>> clauses{original};
  std::size_t produced = 0;
  for (std::size_t subs = 1; subs <= expandable.size() && produced < max_alternatives; ++subs) {
    std::vector<std::size_t> subset(subs);
    for (std::size_t i = 0; i < subs; ++i) subset[i] = i;
    do {
      // Odometer over candidate ranks; the leftmost position varies slowest.
      std::vector<std::size_t> choice(subs, 0);
      while (produced < max_alternatives) {
        auto clause = original;
        for (std::size_t j = 0; j < subs; ++j) {
          const std::size_t pos = expandable[subset[j]];
          clause[pos] = candidates[pos][choice[j]].word;
        }
        clauses.push_back(std::move(clause));
        ++produced;
        std::size_t j = subs;
        while (j-- > 0) {
          if (++choice[j] < candidates[expandable[subset[j]]].size()) break;
          choice[j] = 0;
        }
        if (j == static_cast<std::size_t>(-1)) break;
      }
    } while (produced < max_alternatives && next_combination(subset, expandable.size()));
  }
  return BooleanQuery(std::move(clauses));
}

BooleanQuery expand_query(std::span<const std::string> query, const EmbeddingStore& store,
                          const ExpansionConfig& config) {
  config.validate();
  if (query.empty()) throw ConfigError("cannot expand an empty query");
  return assemble_alternatives(query, expansion_candidates(query, store, config), config.max_alternatives);
}

PipelineResult run_expansion_pipeline(std::span<const Topic> topics, const Index& index, const EmbeddingStore& store,
                                      const ExpansionRunOptions& options) {
  options.expansion.validate();
  options.scorer.validate();
  return run_topics(topics, options.tag, options.threads, [&](const Topic& topic) {
    const auto terms = index.analyze(query_text(topic, options.field));
    if (terms.empty()) throw DataError("query analyzes to no terms");
    const BooleanQuery bq = expand_query(terms, store, options.expansion);
    TopicOutcome out;
    out.ranking = execute_boolean(bq, index, options.scorer, options.depth, options.mode);
    if (bq.size() > 1) out.note = fmt::format("expanded to {} clauses", bq.size());
    return out;
  });
}

}  // namespace embir
