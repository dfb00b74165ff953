#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

namespace embir {

struct ScoredDoc {
  std::string doc_id;
  double score = 0.0;

  bool operator==(const ScoredDoc&) const = default;
};

using Ranking = std::vector<ScoredDoc>;

/// Sorts by score descending, ties by doc_id ascending.
void sort_ranking(Ranking& ranking);

struct RunEntry {
  std::string doc_id;
  double score = 0.0;
  std::uint32_t rank = 0;

  bool operator==(const RunEntry&) const = default;
};

struct TopicRun {
  std::string topic_id;
  std::vector<RunEntry> entries;

  bool operator==(const TopicRun&) const = default;
};

/// TREC run: per topic, an ordered result list; one tag for the whole run.
struct RunFile {
  std::string tag;
  std::vector<TopicRun> topics;

  /// Appends a topic with ranks 1..n taken from the ranking order.
  void add_topic(std::string topic_id, const Ranking& ranking);
  /// Throws DataError if ranks are not contiguous from 1, a doc repeats
  /// within a topic, or scores increase with rank.
  void validate() const;

  bool operator==(const RunFile&) const = default;
};

/// `topic Q0 doc rank score tag`, score with 6 decimals.
void write_run(const RunFile& run, std::ostream& out);
void write_run(const RunFile& run, const std::filesystem::path& path);

/// Parses a TREC run. Topics keep first-appearance order, entries keep file
/// order. Malformed lines throw ParseError with the line number.
RunFile read_run(const std::filesystem::path& path);
RunFile read_run(std::istream& in, const std::string& name = "<run>");

}  // namespace embir
