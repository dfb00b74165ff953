#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace embir {

enum class SourceFormat { trec_sgml, cacm, jsonl, plain_dir };

std::string_view to_string(SourceFormat f);
/// Accepts "trec"/"trec_sgml", "cacm", "jsonl", "plain_dir"/"dir".
SourceFormat parse_source_format(std::string_view name);

struct RawDocument {
  std::string doc_id;
  std::string title;
  std::string body;
  SourceFormat source_format = SourceFormat::jsonl;

  bool operator==(const RawDocument&) const = default;
};

struct IngestIssue {
  std::string file;
  std::uint64_t offset = 0;  // byte offset of the record (uncompressed)
  std::string message;
};

struct IngestStats {
  std::size_t documents = 0;
  /// Undecodable byte sequences replaced with U+FFFD.
  std::size_t replacements = 0;
  std::size_t skipped = 0;
  std::vector<IngestIssue> issues;
};

using DocumentSink = std::function<void(RawDocument&&)>;

/// Streams every document under `path` (a file, or a directory walked in
/// sorted order) to `sink`, in file order. Files ending in ".gz" are
/// decompressed transparently. Malformed records are skipped and reported;
/// a duplicate doc_id throws IngestError.
IngestStats ingest_collection(const std::filesystem::path& path, SourceFormat format, const DocumentSink& sink);

/// Convenience wrapper collecting the stream into a vector.
std::vector<RawDocument> read_collection(const std::filesystem::path& path, SourceFormat format,
                                         IngestStats* stats = nullptr);

/// Writes {id, title, body} records, one JSON object per line.
void write_jsonl(std::span<const RawDocument> docs, std::ostream& out);

/// Replaces invalid UTF-8 sequences with U+FFFD, adding to `replacements`.
std::string sanitize_utf8(std::string_view bytes, std::size_t& replacements);

// ---------------------------------------------------------------------------

enum class TopicFormat { trec_topics, tsv, cacm };

std::string_view to_string(TopicFormat f);
TopicFormat parse_topic_format(std::string_view name);

struct Topic {
  std::string topic_id;
  std::string title;
  std::string description;

  bool operator==(const Topic&) const = default;
};

/// Which topic fields make up the query text.
enum class TopicField { title, title_description };

TopicField parse_topic_field(std::string_view name);
std::string query_text(const Topic& topic, TopicField field);

/// Topics in file order. Topics without a title are skipped and reported in
/// `issues` when given.
std::vector<Topic> ingest_topics(const std::filesystem::path& path, TopicFormat format,
                                 std::vector<IngestIssue>* issues = nullptr);

}  // namespace embir
