#pragma once

#include <functional>
#include <span>
#include <string>
#include <vector>

#include "embir/corpus.hpp"
#include "embir/index.hpp"
#include "embir/lexical.hpp"
#include "embir/run.hpp"

namespace embir {

struct TopicFailure {
  std::string topic_id;
  std::string message;
};

/// A run plus what happened along the way. Topics that failed are absent
/// from the run; `notes` hold per-topic remarks (fallbacks, clause counts).
struct PipelineResult {
  RunFile run;
  std::vector<TopicFailure> failures;
  std::vector<std::string> notes;
};

/// Outcome for one topic, produced independently of all others.
struct TopicOutcome {
  Ranking ranking;
  std::string note;
};

using TopicFn = std::function<TopicOutcome(const Topic&)>;

/// Runs fn over topics on up to `threads` workers. Output order follows
/// topic order regardless of scheduling; exceptions become failures.
PipelineResult run_topics(std::span<const Topic> topics, const std::string& tag, unsigned threads, const TopicFn& fn);

struct LexicalRunOptions {
  ScorerParams scorer;
  std::size_t depth = 1000;
  std::string tag = "embir";
  TopicField field = TopicField::title;
  unsigned threads = 1;
};

/// Plain BM25 / QL baseline run.
PipelineResult run_lexical_pipeline(std::span<const Topic> topics, const Index& index, const LexicalRunOptions& options);

}  // namespace embir
