#include "embir/affect.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <future>
#include <sstream>

#include "embir/errors.hpp"
#include "embir/index.hpp"

namespace embir {

namespace {

std::vector<std::string> split_tabs(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream in(line);
  while (std::getline(in, cell, '\t')) out.push_back(cell);
  if (!line.empty() && line.back() == '\t') out.emplace_back();
  return out;
}

std::optional<double> parse_double(std::string_view s) {
  while (!s.empty() && (s.front() == ' ')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\r')) s.remove_suffix(1);
  double v = 0.0;
  const auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (s.empty() || ec != std::errc{} || p != s.data() + s.size() || !std::isfinite(v)) return std::nullopt;
  return v;
}

using Wide = unsigned __int128;

// Rounded integer division.
Wide div_round(Wide num, Wide den) { return (num + den / 2) / den; }

double to_double(Wide fixed) {
  return static_cast<double>(static_cast<long double>(fixed) / static_cast<long double>(AffectLexicon::kOne));
}

}  // namespace

AffectLexicon AffectLexicon::from_raw(std::vector<std::string> dimensions,
                                      const std::vector<std::pair<std::string, std::vector<double>>>& rows,
                                      const AnalyzerConfig& config, LoadStats* stats) {
  LoadStats local;
  const Analyzer analyzer(config);
  const std::size_t dims = dimensions.size();
  if (dims == 0) throw DataError("affect lexicon has no dimensions");

  std::vector<std::pair<std::string, const std::vector<double>*>> kept;
  std::unordered_map<std::string, bool> seen;
  for (const auto& [word, values] : rows) {
    const auto terms = analyzer.analyze(word);
    if (terms.size() != 1 || values.size() != dims) {
      ++local.skipped_rows;
      continue;
    }
    if (!seen.emplace(terms.front(), true).second) {
      ++local.duplicates;
      continue;
    }
    kept.emplace_back(terms.front(), &values);
  }
  if (kept.empty()) throw DataError("affect lexicon is empty");

  std::vector<double> lo(dims, INFINITY);
  std::vector<double> hi(dims, -INFINITY);
  for (const auto& [word, values] : kept) {
    for (std::size_t d = 0; d < dims; ++d) {
      lo[d] = std::min(lo[d], (*values)[d]);
      hi[d] = std::max(hi[d], (*values)[d]);
    }
  }
  AffectLexicon lex;
  lex.dimensions_ = std::move(dimensions);
  for (const auto& [word, values] : kept) {
    std::vector<std::int64_t> fixed(dims);
    for (std::size_t d = 0; d < dims; ++d) {
      const double norm = hi[d] > lo[d] ? ((*values)[d] - lo[d]) / (hi[d] - lo[d]) : 0.5;
      fixed[d] = std::llround(std::clamp(norm, 0.0, 1.0) * static_cast<double>(kOne));
    }
    lex.entries_.emplace(word, std::move(fixed));
  }
  if (stats != nullptr) *stats = local;
  return lex;
}

const std::vector<std::int64_t>* AffectLexicon::fixed_scores(std::string_view word) const {
  const auto it = entries_.find(std::string(word));
  return it == entries_.end() ? nullptr : &it->second;
}

std::optional<std::vector<double>> AffectLexicon::scores(std::string_view word) const {
  const auto* f = fixed_scores(word);
  if (f == nullptr) return std::nullopt;
  std::vector<double> out;
  out.reserve(f->size());
  for (const auto v : *f) out.push_back(static_cast<double>(v) / static_cast<double>(kOne));
  return out;
}

AffectLexicon load_lexicon(const std::filesystem::path& path, const AnalyzerConfig& config,
                           AffectLexicon::LoadStats* stats) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open lexicon " + path.string());
  std::string line;
  if (!std::getline(in, line)) throw DataError(path.string() + ": lexicon is empty");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  auto header = split_tabs(line);
  if (header.size() < 2) throw DataError(path.string() + ": lexicon header must be word<TAB>dim1[<TAB>dim2...]");
  std::vector<std::string> dims(header.begin() + 1, header.end());

  std::vector<std::pair<std::string, std::vector<double>>> rows;
  std::size_t bad = 0;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto cells = split_tabs(line);
    std::vector<double> values;
    bool ok = cells.size() == dims.size() + 1;
    for (std::size_t i = 1; ok && i < cells.size(); ++i) {
      const auto v = parse_double(cells[i]);
      ok = v.has_value();
      if (ok) values.push_back(*v);
    }
    if (!ok) {
      ++bad;
      continue;
    }
    rows.emplace_back(cells[0], std::move(values));
  }
  AffectLexicon::LoadStats local;
  AffectLexicon lex;
  try {
    lex = AffectLexicon::from_raw(std::move(dims), rows, config, &local);
  } catch (const DataError& e) {
    throw DataError(path.string() + ": " + e.what());
  }
  local.skipped_rows += bad;
  if (stats != nullptr) *stats = local;
  return lex;
}

AffectAggregate parse_affect_aggregate(std::string_view name) {
  if (name == "documents" || name == "docs") return AffectAggregate::documents;
  if (name == "tokens") return AffectAggregate::tokens;
  throw ConfigError("unknown aggregate '" + std::string(name) + "' (expected documents|tokens)");
}

std::string_view to_string(AffectAggregate a) { return a == AffectAggregate::tokens ? "tokens" : "documents"; }

// --- accumulation ------------------------------------------------------------

AffectAccumulator::AffectAccumulator(std::size_t dimensions)
    : doc_mean_sum_(dimensions, 0), token_sum_(dimensions, 0) {}

void AffectAccumulator::add_document(std::span<const std::string> terms, const AffectLexicon& lexicon) {
  const std::size_t dims = doc_mean_sum_.size();
  std::vector<Wide> sums(dims, 0);
  std::uint64_t matched = 0;
  for (const auto& t : terms) {
    const auto* s = lexicon.fixed_scores(t);
    if (s == nullptr) continue;
    ++matched;
    for (std::size_t d = 0; d < dims; ++d) sums[d] += static_cast<Wide>((*s)[d]);
  }
  total_tokens_ += terms.size();
  if (matched == 0) {
    ++docs_skipped_;
    return;
  }
  ++docs_scored_;
  matched_tokens_ += matched;
  for (std::size_t d = 0; d < dims; ++d) {
    doc_mean_sum_[d] += div_round(sums[d], matched);
    token_sum_[d] += sums[d];
  }
}

void AffectAccumulator::merge(const AffectAccumulator& other) {
  for (std::size_t d = 0; d < doc_mean_sum_.size(); ++d) {
    doc_mean_sum_[d] += other.doc_mean_sum_[d];
    token_sum_[d] += other.token_sum_[d];
  }
  docs_scored_ += other.docs_scored_;
  docs_skipped_ += other.docs_skipped_;
  total_tokens_ += other.total_tokens_;
  matched_tokens_ += other.matched_tokens_;
}

AffectReport AffectAccumulator::report(const AffectLexicon& lexicon, AffectAggregate aggregate) const {
  AffectReport r;
  r.dimensions = lexicon.dimensions();
  r.docs_scored = docs_scored_;
  r.docs_skipped = docs_skipped_;
  r.total_tokens = total_tokens_;
  r.matched_tokens = matched_tokens_;
  r.aggregate = aggregate;
  const double cov = total_tokens_ == 0 ? 0.0 : static_cast<double>(matched_tokens_) / static_cast<double>(total_tokens_);
  for (std::size_t d = 0; d < doc_mean_sum_.size(); ++d) {
    r.coverage.push_back(cov);
    if (docs_scored_ == 0) {
      r.means.emplace_back(std::nullopt);
    } else if (aggregate == AffectAggregate::documents) {
      r.means.emplace_back(to_double(div_round(doc_mean_sum_[d], docs_scored_)));
    } else {
      r.means.emplace_back(to_double(div_round(token_sum_[d], matched_tokens_)));
    }
  }
  return r;
}

nlohmann::ordered_json AffectReport::to_json() const {
  nlohmann::ordered_json j;
  j["aggregate"] = std::string(to_string(aggregate));
  j["docs_scored"] = docs_scored;
  j["docs_skipped"] = docs_skipped;
  j["total_tokens"] = total_tokens;
  j["matched_tokens"] = matched_tokens;
  j["means_defined"] = means_defined();
  auto dims = nlohmann::ordered_json::array();
  for (std::size_t d = 0; d < dimensions.size(); ++d) {
    nlohmann::ordered_json e;
    e["name"] = dimensions[d];
    e["mean"] = means[d] ? nlohmann::ordered_json(*means[d]) : nlohmann::ordered_json(nullptr);
    e["coverage"] = coverage[d];
    dims.push_back(std::move(e));
  }
  j["dimensions"] = std::move(dims);
  return j;
}

AffectReport score_corpus(std::span<const RawDocument> docs, const AffectLexicon& lexicon,
                          const AnalyzerConfig& config, AffectAggregate aggregate, unsigned threads) {
  if (lexicon.empty()) throw DataError("affect lexicon is empty");
  if (docs.empty()) throw DataError("cannot score an empty corpus");
  const Analyzer analyzer(config);
  const std::size_t dims = lexicon.dimensions().size();
  auto score_range = [&](std::size_t begin, std::size_t end) {
    AffectAccumulator acc(dims);
    for (std::size_t i = begin; i < end; ++i) acc.add_document(analyzer.analyze(indexable_text(docs[i])), lexicon);
    return acc;
  };
  threads = std::max(1u, threads);
  if (threads == 1 || docs.size() < 2 * threads) return score_range(0, docs.size()).report(lexicon, aggregate);
  std::vector<std::future<AffectAccumulator>> parts;
  const std::size_t chunk = (docs.size() + threads - 1) / threads;
  for (std::size_t begin = 0; begin < docs.size(); begin += chunk) {
    parts.push_back(std::async(std::launch::async, score_range, begin, std::min(docs.size(), begin + chunk)));
  }
  AffectAccumulator total(dims);
  for (auto& p : parts) total.merge(p.get());
  return total.report(lexicon, aggregate);
}

AffectReport score_corpus(const std::filesystem::path& path, SourceFormat format, const AffectLexicon& lexicon,
                          const AnalyzerConfig& config, AffectAggregate aggregate, IngestStats* stats) {
  if (lexicon.empty()) throw DataError("affect lexicon is empty");
  const Analyzer analyzer(config);
  AffectAccumulator acc(lexicon.dimensions().size());
  const IngestStats s = ingest_collection(path, format, [&](RawDocument&& doc) {
    acc.add_document(analyzer.analyze(indexable_text(doc)), lexicon);
  });
  if (stats != nullptr) *stats = s;
  if (acc.documents() == 0) throw DataError("cannot score an empty corpus: " + path.string());
  return acc.report(lexicon, aggregate);
}

}  // namespace embir
