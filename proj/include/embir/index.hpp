#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "embir/analysis.hpp"
#include "embir/corpus.hpp"

namespace embir {

using DocOrdinal = std::uint32_t;
using TermId = std::uint32_t;

struct Posting {
  DocOrdinal doc = 0;
  std::uint32_t tf = 0;

  bool operator==(const Posting&) const = default;
};

struct IndexStats {
  std::uint64_t num_docs = 0;
  std::uint64_t total_tokens = 0;
  double avg_doc_len = 0.0;
};

/// Text that gets indexed for a document. CACM bodies already carry the title.
std::string indexable_text(const RawDocument& doc);

/// Immutable inverted index with a sorted term dictionary, per-term postings
/// sorted by doc ordinal, and a doc table. Safe for concurrent readers.
class Index {
 public:
  static constexpr std::uint32_t kFormatVersion = 1;

  Index() = default;

  const AnalyzerConfig& analyzer_config() const { return analyzer_; }
  const std::string& analyzer_fingerprint() const { return analyzer_fingerprint_; }
  /// Throws FingerprintError when `config` differs from the build analyzer.
  void require_analyzer(const AnalyzerConfig& config) const;
  /// Analyzes query text with the analyzer the index was built with.
  std::vector<std::string> analyze(std::string_view text) const;

  IndexStats stats() const;
  std::size_t num_docs() const { return doc_ids_.size(); }
  std::uint64_t total_tokens() const { return total_tokens_; }
  double avg_doc_len() const;
  std::size_t num_terms() const { return terms_.size(); }

  std::optional<TermId> term_id(std::string_view term) const;
  const std::string& term(TermId id) const { return terms_[id]; }
  std::uint32_t df(TermId id) const { return static_cast<std::uint32_t>(offsets_[id + 1] - offsets_[id]); }
  std::uint64_t cf(TermId id) const { return cf_[id]; }
  std::span<const Posting> postings(TermId id) const;
  /// Term frequency of `id` in `doc`; 0 when absent.
  std::uint32_t tf(TermId id, DocOrdinal doc) const;
  /// ln((N + 1) / (df + 1)) + 1
  double idf(TermId id) const;

  const std::string& doc_id(DocOrdinal doc) const { return doc_ids_[doc]; }
  std::uint32_t doc_length(DocOrdinal doc) const { return doc_lengths_[doc]; }
  std::optional<DocOrdinal> doc_ordinal(std::string_view doc_id) const;

  /// Hash of the serialized contents; identical for observationally equal indexes.
  const std::string& fingerprint() const { return fingerprint_; }

  void save(const std::filesystem::path& path) const;
  static Index load(const std::filesystem::path& path);

  bool operator==(const Index& other) const;

 private:
  friend class IndexBuilder;
  friend Index merge_indexes(const Index& first, const Index& second);

  std::string serialize_payload() const;
  static Index deserialize_payload(std::string_view payload);
  void finalize();

  AnalyzerConfig analyzer_;
  std::string analyzer_fingerprint_;
  std::vector<std::string> terms_;
  std::unordered_map<std::string, TermId> term_lookup_;
  std::vector<std::uint64_t> offsets_{0};
  std::vector<Posting> postings_;
  std::vector<std::uint64_t> cf_;
  std::vector<std::string> doc_ids_;
  std::vector<std::uint32_t> doc_lengths_;
  std::unordered_map<std::string, DocOrdinal> doc_lookup_;
  std::uint64_t total_tokens_ = 0;
  std::string fingerprint_;
};

/// Accumulates documents in ordinal order. Not thread-safe.
class IndexBuilder {
 public:
  explicit IndexBuilder(AnalyzerConfig config = {});

  const Analyzer& analyzer() const { return analyzer_; }

  void add(const RawDocument& doc);
  /// Adds a document whose terms were produced by analyzer().
  void add_analyzed(std::string doc_id, std::span<const std::string> terms);

  Index finish() &&;

 private:
  Analyzer analyzer_;
  std::unordered_map<std::string, std::vector<Posting>> postings_;
  std::vector<std::string> doc_ids_;
  std::vector<std::uint32_t> doc_lengths_;
  std::unordered_map<std::string, DocOrdinal> doc_lookup_;
  std::uint64_t total_tokens_ = 0;
};

/// Analysis runs on up to `threads` workers; ordinals follow input order.
Index build_index(std::span<const RawDocument> docs, const AnalyzerConfig& config, unsigned threads = 0);

/// Streams a collection from disk into an index, analyzing in parallel batches.
Index build_index(const std::filesystem::path& path, SourceFormat format, const AnalyzerConfig& config,
                  IngestStats* stats = nullptr, unsigned threads = 0);

/// Index of `first`'s documents followed by `second`'s. Both must share an
/// analyzer and have disjoint doc ids.
Index merge_indexes(const Index& first, const Index& second);

struct DocTerm {
  TermId term = 0;
  std::uint32_t tf = 0;
};

/// Per-document (term, tf) lists, terms ascending. Built by inverting the postings.
class ForwardIndex {
 public:
  explicit ForwardIndex(const Index& index);

  std::span<const DocTerm> terms(DocOrdinal doc) const {
    return std::span<const DocTerm>(entries_).subspan(offsets_[doc], offsets_[doc + 1] - offsets_[doc]);
  }

 private:
  std::vector<std::uint64_t> offsets_;
  std::vector<DocTerm> entries_;
};

/// tf(term, doc) * idf(term). Throws DataError when the term does not occur in the doc.
double tfidf_weight(std::string_view term, DocOrdinal doc, const Index& index);

}  // namespace embir
