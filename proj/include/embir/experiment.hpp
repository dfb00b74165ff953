#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "embir/analysis.hpp"
#include "embir/awe.hpp"
#include "embir/corpus.hpp"
#include "embir/embeddings.hpp"
#include "embir/evaluation.hpp"
#include "embir/expansion.hpp"
#include "embir/index.hpp"
#include "embir/lexical.hpp"
#include "embir/pipeline.hpp"

namespace embir {

enum class PipelineKind { bm25, ql, expand, awe };

std::string_view to_string(PipelineKind p);
PipelineKind parse_pipeline(std::string_view name);

/// One fully specified experiment: inputs, pipeline, parameters, outputs.
struct ExperimentConfig {
  std::string name;

  std::filesystem::path corpus;
  SourceFormat corpus_format = SourceFormat::trec_sgml;
  AnalyzerConfig analyzer;
  /// Whether the analyzer was set explicitly (and must match the index).
  bool analyzer_explicit = false;
  std::filesystem::path index;

  std::filesystem::path embeddings;
  EmbeddingFormat embeddings_format = EmbeddingFormat::glove_text;
  bool restrict_to_index = false;

  PipelineKind pipeline = PipelineKind::bm25;
  std::filesystem::path topics;
  TopicFormat topic_format = TopicFormat::tsv;
  TopicField topic_field = TopicField::title;

  ScorerParams scorer;
  ExpansionConfig expansion;
  BooleanMode boolean_mode = BooleanMode::union_terms;
  AweConfig awe;
  std::filesystem::path awe_cache;
  std::size_t depth = 1000;

  std::filesystem::path qrels;
  std::size_t eval_depth = 1000;

  std::filesystem::path output;
  std::string tag;

  /// Throws ConfigError naming the offending field or file.
  void validate() const;
  /// Sorted `key=value` lines covering every setting that affects results.
  std::string canonical() const;
  /// SHA-256 of canonical().
  std::string hash() const;
};

/// INI-style batch file. A `[defaults]` section supplies shared keys; every
/// other section is one experiment, in file order. Relative paths resolve
/// against the config file's directory.
std::vector<ExperimentConfig> load_batch_config(const std::filesystem::path& path);

/// Applies one `key = value` setting. Throws ConfigError for unknown keys
/// or bad values.
void apply_setting(ExperimentConfig& config, const std::string& key, const std::string& value,
                   const std::filesystem::path& base_dir = {});

/// Loaded indexes and embedding stores shared between experiments.
class ResourceCache {
 public:
  std::shared_ptr<const Index> index(const ExperimentConfig& config);
  std::shared_ptr<const EmbeddingStore> embeddings(const std::filesystem::path& path, EmbeddingFormat format);

 private:
  std::mutex mutex_;
  std::map<std::string, std::shared_ptr<const Index>> indexes_;
  std::map<std::string, std::shared_ptr<const EmbeddingStore>> stores_;
};

struct ExperimentOutcome {
  PipelineResult result;
  std::optional<MetricResult> ndcg;
  std::optional<MetricResult> map;
};

/// Runs the pipeline, writes the run file and its `.meta` sidecar, and
/// evaluates when qrels are configured.
ExperimentOutcome run_experiment(const ExperimentConfig& config, ResourceCache& cache, unsigned threads = 1);

/// Provenance sidecar written next to each run file.
std::string run_metadata(const ExperimentConfig& config, const PipelineResult& result);

struct BatchRow {
  std::string tag;
  double ndcg = 0.0;
  double map = 0.0;
};

void write_batch_table(const std::vector<BatchRow>& rows, std::ostream& out);

}  // namespace embir
