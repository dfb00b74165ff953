#include "embir/run.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

#include <fmt/format.h>

#include "embir/errors.hpp"

namespace embir {

void sort_ranking(Ranking& ranking) {
  std::sort(ranking.begin(), ranking.end(), [](const ScoredDoc& a, const ScoredDoc& b) {
    if (a.score != b.score) return a.score > b.score;
    return a.doc_id < b.doc_id;
  });
}

void RunFile::add_topic(std::string topic_id, const Ranking& ranking) {
  TopicRun t;
  t.topic_id = std::move(topic_id);
  t.entries.reserve(ranking.size());
  std::uint32_t rank = 1;
  for (const auto& sd : ranking) t.entries.push_back({sd.doc_id, sd.score, rank++});
  topics.push_back(std::move(t));
}

void RunFile::validate() const {
  std::unordered_set<std::string> topic_ids;
  for (const auto& t : topics) {
    if (!topic_ids.insert(t.topic_id).second) throw DataError("run lists topic " + t.topic_id + " twice");
    std::unordered_set<std::string> docs;
    for (std::size_t i = 0; i < t.entries.size(); ++i) {
      const auto& e = t.entries[i];
      if (e.rank != i + 1) {
        throw DataError(fmt::format("topic {}: rank {} at position {} (ranks must run 1..n)", t.topic_id, e.rank, i + 1));
      }
      if (!docs.insert(e.doc_id).second) {
        throw DataError("topic " + t.topic_id + ": document " + e.doc_id + " retrieved twice");
      }
      if (i > 0 && e.score > t.entries[i - 1].score) {
        throw DataError(fmt::format("topic {}: score increases at rank {}", t.topic_id, e.rank));
      }
    }
  }
}

void write_run(const RunFile& run, std::ostream& out) {
  const std::string tag = run.tag.empty() ? "embir" : run.tag;
  for (const auto& t : run.topics) {
    for (const auto& e : t.entries) {
      out << fmt::format("{} Q0 {} {} {:.6f} {}\n", t.topic_id, e.doc_id, e.rank, e.score, tag);
    }
  }
}

void write_run(const RunFile& run, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot write run file " + path.string());
  write_run(run, out);
  if (!out) throw DataError("write failed for run file " + path.string());
}

RunFile read_run(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open run file " + path.string());
  return read_run(in, path.string());
}

RunFile read_run(std::istream& in, const std::string& name) {
  RunFile run;
  std::unordered_map<std::string, std::size_t> topic_pos;
  std::unordered_map<std::string, std::unordered_set<std::string>> seen;
  std::string line;
  std::uint64_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    std::istringstream fields(line);
    std::string topic;
    std::string q0;
    std::string doc;
    std::string rank_s;
    std::string score_s;
    std::string tag;
    std::string extra;
    if (!(fields >> topic >> q0 >> doc >> rank_s >> score_s >> tag) || (fields >> extra)) {
      throw ParseError(name, lineno, "expected 6 fields: topic Q0 doc rank score tag");
    }
    std::uint32_t rank = 0;
    double score = 0.0;
    const auto [rp, rec] = std::from_chars(rank_s.data(), rank_s.data() + rank_s.size(), rank);
    if (rec != std::errc{} || rp != rank_s.data() + rank_s.size()) throw ParseError(name, lineno, "bad rank '" + rank_s + "'");
    const auto [sp, sec] = std::from_chars(score_s.data(), score_s.data() + score_s.size(), score);
    if (sec != std::errc{} || sp != score_s.data() + score_s.size()) {
      throw ParseError(name, lineno, "bad score '" + score_s + "'");
    }
    if (run.tag.empty()) run.tag = tag;
    auto [it, inserted] = topic_pos.emplace(topic, run.topics.size());
    if (inserted) run.topics.push_back({topic, {}});
    if (!seen[topic].insert(doc).second) {
      throw ParseError(name, lineno, "document " + doc + " appears twice for topic " + topic);
    }
    run.topics[it->second].entries.push_back({doc, score, rank});
  }
  return run;
}

}  // namespace embir
