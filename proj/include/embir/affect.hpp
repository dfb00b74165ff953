#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include <nlohmann/json.hpp>

#include "embir/analysis.hpp"
#include "embir/corpus.hpp"

namespace embir {

/// Word -> per-dimension scores, min-max normalized to [0, 1] per dimension.
/// Scores are held in fixed point (units of 2^-40) so corpus aggregation is
/// exact and independent of document order.
class AffectLexicon {
 public:
  static constexpr int kFractionBits = 40;
  static constexpr std::int64_t kOne = std::int64_t{1} << kFractionBits;

  struct LoadStats {
    std::size_t duplicates = 0;
    std::size_t skipped_rows = 0;
  };

  /// Normalizes raw scores: (x - min) / (max - min) per dimension, or 0.5
  /// for a constant column. Words are lowercased by `config`'s analyzer;
  /// entries that do not analyze to exactly one term are skipped.
  static AffectLexicon from_raw(std::vector<std::string> dimensions,
                                const std::vector<std::pair<std::string, std::vector<double>>>& rows,
                                const AnalyzerConfig& config = {}, LoadStats* stats = nullptr);

  const std::vector<std::string>& dimensions() const { return dimensions_; }
  std::size_t size() const { return entries_.size(); }
  bool empty() const { return entries_.empty(); }

  /// Fixed-point scores, one per dimension; nullptr when absent.
  const std::vector<std::int64_t>* fixed_scores(std::string_view word) const;
  /// Scores as doubles; nullopt when absent.
  std::optional<std::vector<double>> scores(std::string_view word) const;

 private:
  std::vector<std::string> dimensions_;
  std::unordered_map<std::string, std::vector<std::int64_t>> entries_;
};

/// TSV with header `word<TAB>dim1<TAB>dim2...`. Rows with a missing or
/// non-numeric cell are skipped; duplicate words keep the first row.
AffectLexicon load_lexicon(const std::filesystem::path& path, const AnalyzerConfig& config = {},
                           AffectLexicon::LoadStats* stats = nullptr);

enum class AffectAggregate {
  documents,  // mean of per-document token means
  tokens,     // mean over all matched tokens in the corpus
};

AffectAggregate parse_affect_aggregate(std::string_view name);
std::string_view to_string(AffectAggregate a);

struct AffectReport {
  std::vector<std::string> dimensions;
  /// nullopt when no token matched anywhere.
  std::vector<std::optional<double>> means;
  std::vector<double> coverage;
  std::size_t docs_scored = 0;
  std::size_t docs_skipped = 0;
  std::uint64_t total_tokens = 0;
  std::uint64_t matched_tokens = 0;
  AffectAggregate aggregate = AffectAggregate::documents;

  bool means_defined() const { return docs_scored > 0; }
  nlohmann::ordered_json to_json() const;
};

/// Commutative, associative accumulation of affect statistics.
class AffectAccumulator {
 public:
  explicit AffectAccumulator(std::size_t dimensions);

  void add_document(std::span<const std::string> terms, const AffectLexicon& lexicon);
  void merge(const AffectAccumulator& other);
  AffectReport report(const AffectLexicon& lexicon, AffectAggregate aggregate) const;

  std::size_t documents() const { return docs_scored_ + docs_skipped_; }

 private:
  using Wide = unsigned __int128;

  std::vector<Wide> doc_mean_sum_;  // sum over scored docs of fixed-point doc means
  std::vector<Wide> token_sum_;     // sum over all matched tokens
  std::size_t docs_scored_ = 0;
  std::size_t docs_skipped_ = 0;
  std::uint64_t total_tokens_ = 0;
  std::uint64_t matched_tokens_ = 0;
};

/// Throws DataError for an empty document set or an empty lexicon.
AffectReport score_corpus(std::span<const RawDocument> docs, const AffectLexicon& lexicon,
                          const AnalyzerConfig& config = {}, AffectAggregate aggregate = AffectAggregate::documents,
                          unsigned threads = 1);

/// Streaming variant over a collection on disk.
AffectReport score_corpus(const std::filesystem::path& path, SourceFormat format, const AffectLexicon& lexicon,
                          const AnalyzerConfig& config = {}, AffectAggregate aggregate = AffectAggregate::documents,
                          IngestStats* stats = nullptr);

}  // namespace embir
