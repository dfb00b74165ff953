#include "embir/evaluation.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <optional>
#include <sstream>

#include <fmt/format.h>

#include "embir/errors.hpp"

namespace embir {

int Qrels::grade(const std::string& topic, const std::string& doc) const {
  const auto t = judgments.find(topic);
  if (t == judgments.end()) return 0;
  const auto d = t->second.find(doc);
  return d == t->second.end() ? 0 : d->second;
}

Qrels read_qrels(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open qrels file " + path.string());
  return read_qrels(in, path.string());
}

Qrels read_qrels(std::istream& in, const std::string& name) {
  Qrels q;
  std::string line;
  std::uint64_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    std::istringstream fields(line);
    std::string topic;
    std::string iter;
    std::string doc;
    std::string grade_s;
    std::string extra;
    if (!(fields >> topic >> iter >> doc >> grade_s) || (fields >> extra)) {
      throw ParseError(name, lineno, "expected 4 fields: topic iteration doc grade");
    }
    int grade = 0;
    const auto [p, ec] = std::from_chars(grade_s.data(), grade_s.data() + grade_s.size(), grade);
    if (ec != std::errc{} || p != grade_s.data() + grade_s.size()) {
      throw ParseError(name, lineno, "bad relevance grade '" + grade_s + "'");
    }
    if (grade < 0) {
      grade = 0;
      ++q.clamped;
    }
    if (!q.judgments[topic].emplace(doc, grade).second) {
      throw ParseError(name, lineno, "duplicate judgment for topic " + topic + " document " + doc);
    }
  }
  return q;
}

namespace {

using TopicMetric = std::function<std::optional<double>(const TopicRun&, const std::map<std::string, int>&, std::size_t)>;

MetricResult evaluate(const std::string& metric, const RunFile& run, const Qrels& qrels, std::size_t depth,
                      const TopicMetric& fn) {
  if (run.topics.empty()) throw DataError("cannot evaluate an empty run");
  MetricResult r;
  r.metric = metric;
  double sum = 0.0;
  for (const auto& t : run.topics) {
    const auto it = qrels.judgments.find(t.topic_id);
    if (it == qrels.judgments.end()) {
      ++r.skipped_unjudged;
      continue;
    }
    const auto value = fn(t, it->second, depth);
    if (!value) {
      ++r.excluded_no_relevant;
      continue;
    }
    r.per_topic.push_back({t.topic_id, *value});
    sum += *value;
  }
  r.mean = r.per_topic.empty() ? 0.0 : sum / static_cast<double>(r.per_topic.size());
  return r;
}

int lookup(const std::map<std::string, int>& judged, const std::string& doc) {
  const auto it = judged.find(doc);
  return it == judged.end() ? 0 : it->second;
}

}  // namespace

MetricResult eval_map(const RunFile& run, const Qrels& qrels, std::size_t depth) {
  return evaluate("map", run, qrels, depth,
                  [](const TopicRun& t, const std::map<std::string, int>& judged, std::size_t depth) -> std::optional<double> {
                    const auto relevant = static_cast<std::size_t>(
                        std::count_if(judged.begin(), judged.end(), [](const auto& kv) { return kv.second >= 1; }));
                    if (relevant == 0) return std::nullopt;
                    double sum = 0.0;
                    std::size_t hits = 0;
                    const std::size_t n = std::min(depth, t.entries.size());
                    for (std::size_t i = 0; i < n; ++i) {
                      if (lookup(judged, t.entries[i].doc_id) >= 1) {
                        ++hits;
                        sum += static_cast<double>(hits) / static_cast<double>(i + 1);
                      }
                    }
                    return sum / static_cast<double>(relevant);
                  });
}

MetricResult eval_ndcg(const RunFile& run, const Qrels& qrels, std::size_t depth) {
  return evaluate("ndcg", run, qrels, depth,
                  [](const TopicRun& t, const std::map<std::string, int>& judged, std::size_t depth) -> std::optional<double> {
                    std::vector<int> ideal;
                    for (const auto& [doc, g] : judged) {
                      if (g > 0) ideal.push_back(g);
                    }
                    std::sort(ideal.begin(), ideal.end(), std::greater<>());
                    double idcg = 0.0;
                    for (std::size_t i = 0; i < std::min(depth, ideal.size()); ++i) {
                      idcg += ideal[i] / std::log2(static_cast<double>(i) + 2.0);
                    }
                    if (idcg == 0.0) return std::nullopt;
                    double dcg = 0.0;
                    const std::size_t n = std::min(depth, t.entries.size());
                    for (std::size_t i = 0; i < n; ++i) {
                      const int g = lookup(judged, t.entries[i].doc_id);
                      if (g > 0) dcg += g / std::log2(static_cast<double>(i) + 2.0);
                    }
                    return dcg / idcg;
                  });
}

void write_metrics(const std::vector<MetricResult>& results, bool per_topic, std::ostream& out) {
  for (const auto& r : results) {
    if (per_topic) {
      for (const auto& ts : r.per_topic) out << fmt::format("{}\t{}\t{:.4f}\n", r.metric, ts.topic_id, ts.value);
    }
    out << fmt::format("{}\tall\t{:.4f}\n", r.metric, r.mean);
  }
}

}  // namespace embir
