#include "embir/pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <exception>
#include <optional>
#include <thread>

namespace embir {

PipelineResult run_topics(std::span<const Topic> topics, const std::string& tag, unsigned threads, const TopicFn& fn) {
  struct Slot {
    std::optional<TopicOutcome> outcome;
    std::string error;
  };
  std::vector<Slot> slots(topics.size());
  auto work = [&](std::size_t i) {
    try {
      slots[i].outcome = fn(topics[i]);
    } catch (const std::exception& e) {
      slots[i].error = e.what();
    }
  };
  threads = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(topics.size())));
  if (threads <= 1) {
    for (std::size_t i = 0; i < topics.size(); ++i) work(i);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::jthread> pool;
    for (unsigned w = 0; w < threads; ++w) {
      pool.emplace_back([&] {
        for (std::size_t i = next++; i < topics.size(); i = next++) work(i);
      });
    }
  }

  PipelineResult result;
  result.run.tag = tag;
  for (std::size_t i = 0; i < topics.size(); ++i) {
    if (!slots[i].outcome) {
      result.failures.push_back({topics[i].topic_id, slots[i].error});
      continue;
    }
    if (!slots[i].outcome->note.empty()) result.notes.push_back(topics[i].topic_id + ": " + slots[i].outcome->note);
    result.run.add_topic(topics[i].topic_id, slots[i].outcome->ranking);
  }
  return result;
}

PipelineResult run_lexical_pipeline(std::span<const Topic> topics, const Index& index, const LexicalRunOptions& options) {
  options.scorer.validate();
  return run_topics(topics, options.tag, options.threads, [&](const Topic& topic) {
    const auto terms = index.analyze(query_text(topic, options.field));
    return TopicOutcome{score_terms(terms, index, options.scorer, options.depth), {}};
  });
}

}  // namespace embir
