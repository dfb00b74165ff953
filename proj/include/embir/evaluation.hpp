#pragma once

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include "embir/run.hpp"

namespace embir {

/// Relevance judgments: topic -> doc -> grade (>= 0).
struct Qrels {
  std::map<std::string, std::map<std::string, int>> judgments;
  /// Negative grades clamped to 0 while reading.
  std::size_t clamped = 0;

  int grade(const std::string& topic, const std::string& doc) const;
  bool has_topic(const std::string& topic) const { return judgments.contains(topic); }
};

/// Lines `topic iteration doc grade`. Malformed lines and duplicate
/// (topic, doc) pairs throw ParseError with the line number.
Qrels read_qrels(const std::filesystem::path& path);
Qrels read_qrels(std::istream& in, const std::string& name = "<qrels>");

struct TopicScore {
  std::string topic_id;
  double value = 0.0;
};

struct MetricResult {
  std::string metric;
  /// Topics that were evaluated, in run order.
  std::vector<TopicScore> per_topic;
  double mean = 0.0;
  /// Run topics absent from the qrels.
  std::size_t skipped_unjudged = 0;
  /// Judged topics excluded because nothing is relevant (R = 0 / IDCG = 0).
  std::size_t excluded_no_relevant = 0;
};

/// Average precision with grade >= 1 as relevant, cut at `depth`.
MetricResult eval_map(const RunFile& run, const Qrels& qrels, std::size_t depth = 1000);
/// NDCG with gain = grade and discount log2(rank + 1), cut at `depth`.
MetricResult eval_ndcg(const RunFile& run, const Qrels& qrels, std::size_t depth = 1000);

/// `metric<TAB>topic<TAB>value` rows (per-topic rows optional) plus an `all` row per metric.
void write_metrics(const std::vector<MetricResult>& results, bool per_topic, std::ostream& out);

}  // namespace embir
