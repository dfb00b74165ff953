#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "embir/embeddings.hpp"
#include "embir/index.hpp"
#include "embir/lexical.hpp"
#include "embir/pipeline.hpp"

namespace embir {

/// How word vectors are combined into a text vector.
///  - mean: occurrence-weighted average of in-vocabulary word vectors.
///  - tfidf_weighted: sum of g(w) * v_w over distinct words divided by the
///    sum of g(w), with g(w) = tf(w, text) * idf(w).
///  - tfidf_divided: sum of v_w / g(w) over distinct words, L2-normalized.
/// Under the tf-idf weightings a word the index has never seen is skipped.
enum class Weighting { mean, tfidf_weighted, tfidf_divided };

std::string_view to_string(Weighting w);
Weighting parse_weighting(std::string_view name);

struct AweConfig {
  Weighting weighting = Weighting::tfidf_weighted;
  /// Documents reranked from the candidate scorer; 0 scores the whole corpus.
  std::size_t rerank_depth = 1000;
  ScorerParams candidates;
};

using DenseVector = std::vector<double>;

/// Text vector for an analyzed term list; nullopt when no term contributes.
std::optional<DenseVector> text_vector(std::span<const std::string> terms, const EmbeddingStore& store,
                                       const Index& index, Weighting weighting);

/// Cosine of two dense vectors, clamped to [-1, 1]; nullopt if either is zero.
std::optional<double> vector_cosine(std::span<const double> a, std::span<const double> b);

/// Score given to documents without a vector; below any cosine.
inline constexpr double kAbsentScore = -2.0;

/// Precomputed document vectors for one (index, store, weighting) triple.
class DocVectors {
 public:
  static constexpr std::uint32_t kFormatVersion = 1;

  static DocVectors compute(const Index& index, const EmbeddingStore& store, Weighting weighting, unsigned threads = 1);

  /// Sidecar cache: loads `path` when its fingerprints match, otherwise
  /// computes and writes it.
  static DocVectors load_or_compute(const std::filesystem::path& path, const Index& index, const EmbeddingStore& store,
                                    Weighting weighting, unsigned threads = 1);

  void save(const std::filesystem::path& path) const;
  /// Throws DataError when the file was built for a different triple.
  static DocVectors load(const std::filesystem::path& path, const Index& index, const EmbeddingStore& store,
                         Weighting weighting);

  std::size_t dim() const { return dim_; }
  std::size_t size() const { return present_.size(); }
  std::optional<std::span<const double>> vector(DocOrdinal doc) const;

  bool operator==(const DocVectors&) const = default;

 private:
  std::string index_fingerprint_;
  std::string store_fingerprint_;
  Weighting weighting_ = Weighting::mean;
  std::size_t dim_ = 0;
  std::vector<char> present_;
  std::vector<double> data_;
};

struct AweResult {
  Ranking ranking;
  /// True when the query had no vector and the candidate order was returned.
  bool fallback = false;
};

/// Holds the per-(index, store) lookups needed to score many queries.
class AweScorer {
 public:
  AweScorer(const Index& index, const EmbeddingStore& store, AweConfig config,
            const DocVectors* precomputed = nullptr);

  const AweConfig& config() const { return config_; }

  std::optional<DenseVector> query_vector(std::span<const std::string> terms) const;
  std::optional<DenseVector> doc_vector(DocOrdinal doc) const;
  /// Candidate documents in candidate-scorer order, unmatched docs after
  /// matched ones by doc_id; all docs when rerank_depth is 0.
  std::vector<DocOrdinal> candidates(std::span<const std::string> terms) const;

  AweResult score(std::span<const std::string> terms, std::size_t k) const;

 private:
  const Index& index_;
  const EmbeddingStore& store_;
  AweConfig config_;
  const DocVectors* precomputed_;
  ForwardIndex forward_;
  std::vector<std::optional<EmbeddingStore::Ordinal>> term_to_store_;
  std::vector<DocOrdinal> by_doc_id_;
};

AweResult score_awe(std::span<const std::string> query, const Index& index, const EmbeddingStore& store,
                    const AweConfig& config, std::size_t k);

struct AweRunOptions {
  AweConfig awe;
  std::size_t depth = 1000;
  std::string tag = "embir-awe";
  TopicField field = TopicField::title;
  unsigned threads = 1;
  /// Doc-vector sidecar; empty disables caching.
  std::filesystem::path cache_path;
};

PipelineResult run_awe_pipeline(std::span<const Topic> topics, const Index& index, const EmbeddingStore& store,
                                const AweRunOptions& options);

}  // namespace embir
