#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace embir {

class Index;

enum class EmbeddingFormat { glove_text, word2vec_text };

std::string_view to_string(EmbeddingFormat f);
EmbeddingFormat parse_embedding_format(std::string_view name);

struct EmbeddingLoadStats {
  std::size_t rows = 0;  // rows accepted
  std::size_t skipped_rows = 0;  // wrong dimension, non-numeric or non-finite
  std::size_t duplicate_words = 0;
  std::size_t zero_rows = 0;
  /// word2vec header vocabulary size, when present.
  std::optional<std::uint64_t> header_vocab;
  /// True when the word2vec header disagrees with the number of rows read.
  bool header_mismatch = false;
};

enum class SimilarityStatus { ok, oov, zero_vector };

/// Cosine result; `value` is meaningful only when status == ok.
struct Similarity {
  SimilarityStatus status = SimilarityStatus::oov;
  double value = 0.0;

  bool ok() const { return status == SimilarityStatus::ok; }
};

struct Neighbor {
  std::string word;
  double cos = 0.0;

  bool operator==(const Neighbor&) const = default;
};

/// Word vectors for a fixed vocabulary. Rows are stored as float with a
/// precomputed inverse L2 norm per row; all-zero rows are flagged and never
/// returned as neighbors. Immutable after construction.
class EmbeddingStore {
 public:
  using Ordinal = std::uint32_t;

  EmbeddingStore() = default;

  /// Builds a store from in-memory rows. Throws DataError on inconsistent
  /// dimensions, non-finite values or duplicate words.
  static EmbeddingStore from_rows(std::vector<std::string> words, const std::vector<std::vector<float>>& rows);

  static EmbeddingStore load(const std::filesystem::path& path, EmbeddingFormat format,
                             EmbeddingLoadStats* stats = nullptr);

  std::size_t size() const { return words_.size(); }
  std::size_t dim() const { return dim_; }

  std::optional<Ordinal> ordinal(std::string_view word) const;
  bool contains(std::string_view word) const { return ordinal(word).has_value(); }
  const std::string& word(Ordinal i) const { return words_[i]; }
  std::span<const float> vector(Ordinal i) const { return {matrix_.data() + std::size_t{i} * dim_, dim_}; }
  /// Row divided by its L2 norm (all zeros for a zero row).
  std::vector<double> unit_vector(Ordinal i) const;
  bool is_zero(Ordinal i) const { return inv_norms_[i] == 0.0; }

  Similarity cosine(std::string_view a, std::string_view b) const;
  /// Both rows must be non-zero. Symmetric bit for bit; clamped to [-1, 1].
  double cosine(Ordinal a, Ordinal b) const;

  /// Up to k words with cosine strictly above min_cos, best first, ties by
  /// vocabulary order. Excludes the query word and zero rows. nullopt when
  /// the query word is not in the vocabulary.
  std::optional<std::vector<Neighbor>> nearest_neighbors(std::string_view word, std::size_t k, double min_cos) const;

  /// Copy keeping only words that occur in the index dictionary.
  EmbeddingStore restricted_to(const Index& index) const;

  /// Hash over vocabulary and vector contents.
  const std::string& fingerprint() const { return fingerprint_; }

 private:
  void finalize();

  std::vector<std::string> words_;
  std::unordered_map<std::string, Ordinal> lookup_;
  std::vector<float> matrix_;
  std::vector<double> inv_norms_;
  std::size_t dim_ = 0;
  std::string fingerprint_;
};

}  // namespace embir
