#include "embir/cli.hpp"

#include <atomic>
#include <cstdlib>
#include <fstream>
#include <future>
#include <iostream>
#include <optional>
#include <thread>

#include <CLI11.hpp>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "embir/affect.hpp"
#include "embir/errors.hpp"
#include "embir/evaluation.hpp"
#include "embir/experiment.hpp"

namespace embir::cli {

namespace fs = std::filesystem;

void configure_logging() {
  static std::once_flag once;
  std::call_once(once, [] {
    auto logger = spdlog::stderr_color_mt("embir");
    logger->set_pattern("[%l] %v");
    spdlog::set_default_logger(logger);
  });
  const char* env = std::getenv("EMBIR_LOG");
  const std::string level = env != nullptr ? env : "warn";
  if (level == "error") spdlog::set_level(spdlog::level::err);
  else if (level == "info") spdlog::set_level(spdlog::level::info);
  else if (level == "debug") spdlog::set_level(spdlog::level::debug);
  else spdlog::set_level(spdlog::level::warn);
}

namespace {

struct AnalyzerFlags {
  std::string stopwords;
  std::string stemmer;
  bool no_lowercase = false;

  void add_to(CLI::App* app) {
    app->add_option("--stopwords", stopwords, "Stopword file (one word per line, '#' comments)")->check(CLI::ExistingFile);
    app->add_option("--stemmer", stemmer, "none|porter");
    app->add_flag("--no-lowercase", no_lowercase, "Keep token case");
  }
  bool given() const { return !stopwords.empty() || !stemmer.empty() || no_lowercase; }
  AnalyzerConfig config() const {
    AnalyzerConfig c;
    c.lowercase = !no_lowercase;
    if (!stemmer.empty()) c.stemmer = parse_stemmer(stemmer);
    if (!stopwords.empty()) c.stopwords = load_stopwords(stopwords);
    return c;
  }
};

// Flags shared by the run-producing subcommands.
struct RunFlags {
  std::string index;
  std::string topics;
  std::string topic_format = "tsv";
  std::string topic_field = "title";
  std::size_t depth = 1000;
  std::string tag;
  std::string output;
  unsigned threads = 1;
  AnalyzerFlags analyzer;

  void add_to(CLI::App* app, const std::string& default_tag) {
    tag = default_tag;
    app->add_option("--index", index, "Index file")->required()->check(CLI::ExistingFile);
    app->add_option("--topics", topics, "Topic file")->required()->check(CLI::ExistingFile);
    app->add_option("--topic-format", topic_format, "tsv|trec|cacm")->capture_default_str();
    app->add_option("--topic-field", topic_field, "title|title+desc")->capture_default_str();
    app->add_option("--depth", depth, "Results per topic")->capture_default_str();
    app->add_option("--tag", tag, "Run tag")->capture_default_str();
    app->add_option("--output", output, "Run file to write")->required();
    app->add_option("--threads", threads, "Topics processed in parallel")->capture_default_str();
    analyzer.add_to(app);
  }

  ExperimentConfig base(PipelineKind pipeline) const {
    ExperimentConfig c;
    c.pipeline = pipeline;
    c.index = index;
    c.topics = topics;
    c.topic_format = parse_topic_format(topic_format);
    c.topic_field = parse_topic_field(topic_field);
    c.depth = depth;
    c.tag = tag;
    c.output = output;
    if (analyzer.given()) {
      c.analyzer = analyzer.config();
      c.analyzer_explicit = true;
    }
    return c;
  }
};

void report_outcome(const ExperimentOutcome& o) {
  for (const auto& f : o.result.failures) spdlog::warn("topic {}: {}", f.topic_id, f.message);
  for (const auto& n : o.result.notes) spdlog::debug("{}", n);
  spdlog::info("wrote {} topics for run '{}'", o.result.run.topics.size(), o.result.run.tag);
}

int run_single(const ExperimentConfig& config, unsigned threads) {
  ResourceCache cache;
  const auto outcome = run_experiment(config, cache, threads);
  report_outcome(outcome);
  return kOk;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  configure_logging();
  CLI::App app{"embir: embedding-based retrieval experiments"};
  app.name("embir");
  app.require_subcommand(1);

  // index
  auto* index_cmd = app.add_subcommand("index", "Build an inverted index from a collection");
  std::string ix_input;
  std::string ix_format = "trec";
  std::string ix_output;
  unsigned ix_threads = 0;
  AnalyzerFlags ix_analyzer;
  index_cmd->add_option("--input", ix_input, "Collection file or directory")->required()->check(CLI::ExistingPath);
  index_cmd->add_option("--format", ix_format, "trec|cacm|jsonl|plain_dir")->capture_default_str();
  index_cmd->add_option("--output", ix_output, "Index file to write")->required();
  index_cmd->add_option("--threads", ix_threads, "Analysis threads (0 = all cores)");
  ix_analyzer.add_to(index_cmd);

  // search
  auto* search_cmd = app.add_subcommand("search", "BM25 or query-likelihood run over a topic file");
  RunFlags search_flags;
  search_flags.add_to(search_cmd, "bm25");
  std::string search_scorer = "bm25";
  ScorerParams search_params;
  search_cmd->add_option("--scorer", search_scorer, "bm25|ql")->capture_default_str();
  search_cmd->add_option("--k1", search_params.bm25.k1, "BM25 k1")->capture_default_str();
  search_cmd->add_option("--b", search_params.bm25.b, "BM25 b")->capture_default_str();
  search_cmd->add_option("--mu", search_params.ql.mu, "QL Dirichlet mu")->capture_default_str();

  // expand-run
  auto* expand_cmd = app.add_subcommand("expand-run", "Embedding query expansion run");
  RunFlags expand_flags;
  expand_flags.add_to(expand_cmd, "expand");
  std::string expand_embeddings;
  std::string expand_format = "glove_text";
  std::string expand_scorer = "bm25";
  std::string expand_mode = "union";
  bool expand_restrict = false;
  ExpansionConfig expansion;
  ScorerParams expand_params;
  expand_cmd->add_option("--embeddings", expand_embeddings, "Embedding file")->required()->check(CLI::ExistingFile);
  expand_cmd->add_option("--format,--embeddings-format", expand_format, "glove_text|word2vec_text")->capture_default_str();
  expand_cmd->add_option("--t", expansion.t, "Minimum cosine for an expansion term (exclusive)")->capture_default_str();
  expand_cmd->add_option("--k-neighbors", expansion.neighbors_per_term, "Neighbors per query term")->capture_default_str();
  expand_cmd->add_option("--max-alternatives", expansion.max_alternatives, "Alternative clauses cap")->capture_default_str();
  expand_cmd->add_option("--scorer", expand_scorer, "bm25|ql")->capture_default_str();
  expand_cmd->add_option("--k1", expand_params.bm25.k1)->capture_default_str();
  expand_cmd->add_option("--b", expand_params.bm25.b)->capture_default_str();
  expand_cmd->add_option("--mu", expand_params.ql.mu)->capture_default_str();
  expand_cmd->add_option("--boolean-mode", expand_mode, "union|max-clause")->capture_default_str();
  expand_cmd->add_flag("--restrict-to-index", expand_restrict, "Drop embedding words absent from the index");

  // awe-run
  auto* awe_cmd = app.add_subcommand("awe-run", "Averaged word embedding ranking run");
  RunFlags awe_flags;
  awe_flags.add_to(awe_cmd, "awe");
  std::string awe_embeddings;
  std::string awe_format = "glove_text";
  std::string awe_weighting = "tfidf_weighted";
  std::string awe_candidate = "bm25";
  std::string awe_cache;
  bool awe_restrict = false;
  AweConfig awe_config;
  awe_cmd->add_option("--embeddings", awe_embeddings, "Embedding file")->required()->check(CLI::ExistingFile);
  awe_cmd->add_option("--format,--embeddings-format", awe_format, "glove_text|word2vec_text")->capture_default_str();
  awe_cmd->add_option("--weighting", awe_weighting, "mean|tfidf_weighted|tfidf_divided")->capture_default_str();
  awe_cmd->add_option("--rerank-depth", awe_config.rerank_depth, "Candidates to rerank (0 = all docs)")->capture_default_str();
  awe_cmd->add_option("--candidate-scorer", awe_candidate, "bm25|ql")->capture_default_str();
  awe_cmd->add_option("--k1", awe_config.candidates.bm25.k1)->capture_default_str();
  awe_cmd->add_option("--b", awe_config.candidates.bm25.b)->capture_default_str();
  awe_cmd->add_option("--mu", awe_config.candidates.ql.mu)->capture_default_str();
  awe_cmd->add_option("--cache", awe_cache, "Document vector sidecar file");
  awe_cmd->add_flag("--restrict-to-index", awe_restrict, "Drop embedding words absent from the index");

  // affect-score
  auto* affect_cmd = app.add_subcommand("affect-score", "Mean lexicon affect scores for a collection");
  std::string af_input;
  std::string af_format = "trec";
  std::string af_lexicon;
  std::string af_output;
  std::string af_aggregate = "documents";
  AnalyzerFlags af_analyzer;
  affect_cmd->add_option("--input", af_input, "Collection file or directory")->required()->check(CLI::ExistingPath);
  affect_cmd->add_option("--format", af_format, "trec|cacm|jsonl|plain_dir")->capture_default_str();
  affect_cmd->add_option("--lexicon", af_lexicon, "Lexicon TSV")->required()->check(CLI::ExistingFile);
  affect_cmd->add_option("--output", af_output, "JSON report (stdout when omitted)");
  affect_cmd->add_option("--aggregate", af_aggregate, "documents|tokens")->capture_default_str();
  af_analyzer.add_to(affect_cmd);

  // eval
  auto* eval_cmd = app.add_subcommand("eval", "NDCG / MAP of a run against qrels");
  std::string ev_run;
  std::string ev_qrels;
  std::vector<std::string> ev_metrics{"map", "ndcg"};
  std::size_t ev_depth = 1000;
  bool ev_per_topic = false;
  std::string ev_output;
  eval_cmd->add_option("--run", ev_run, "TREC run file")->required()->check(CLI::ExistingFile);
  eval_cmd->add_option("--qrels", ev_qrels, "TREC qrels file")->required()->check(CLI::ExistingFile);
  eval_cmd->add_option("--metrics", ev_metrics, "Comma-separated: map,ndcg")->delimiter(',')->capture_default_str();
  eval_cmd->add_option("--depth", ev_depth, "Evaluation cutoff")->capture_default_str();
  eval_cmd->add_flag("--per-topic", ev_per_topic, "Also print one row per topic");
  eval_cmd->add_option("--output", ev_output, "Metrics TSV (stdout when omitted)");

  // batch
  auto* batch_cmd = app.add_subcommand("batch", "Run every experiment in a config file and tabulate NDCG/MAP");
  std::string batch_config;
  std::string batch_output;
  unsigned batch_jobs = 1;
  batch_cmd->add_option("config,--config", batch_config, "Batch config file")->required()->check(CLI::ExistingFile);
  batch_cmd->add_option("--output", batch_output, "Consolidated TSV (stdout when omitted)");
  batch_cmd->add_option("--jobs", batch_jobs, "Experiments run in parallel")->capture_default_str();

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kOk;
  } catch (const CLI::ParseError& e) {
    err << "embir: " << e.what() << "\n";
    return kUsage;
  }

  try {
    if (index_cmd->parsed()) {
      const AnalyzerConfig cfg = ix_analyzer.config();
      IngestStats stats;
      const Index ix = build_index(ix_input, parse_source_format(ix_format), cfg, &stats, ix_threads);
      for (const auto& issue : stats.issues) spdlog::warn("{}@{}: {}", issue.file, issue.offset, issue.message);
      if (stats.replacements > 0) spdlog::warn("{} undecodable byte sequences replaced", stats.replacements);
      ix.save(ix_output);
      spdlog::info("indexed {} documents ({} skipped), {} terms", ix.num_docs(), stats.skipped, ix.num_terms());
      return kOk;
    }
    if (search_cmd->parsed()) {
      auto c = search_flags.base(parse_scorer(search_scorer) == Scorer::bm25 ? PipelineKind::bm25 : PipelineKind::ql);
      c.scorer = search_params;
      return run_single(c, search_flags.threads);
    }
    if (expand_cmd->parsed()) {
      auto c = expand_flags.base(PipelineKind::expand);
      c.embeddings = expand_embeddings;
      c.embeddings_format = parse_embedding_format(expand_format);
      c.expansion = expansion;
      c.scorer = expand_params;
      c.scorer.scorer = parse_scorer(expand_scorer);
      c.boolean_mode = parse_boolean_mode(expand_mode);
      c.restrict_to_index = expand_restrict;
      return run_single(c, expand_flags.threads);
    }
    if (awe_cmd->parsed()) {
      auto c = awe_flags.base(PipelineKind::awe);
      c.embeddings = awe_embeddings;
      c.embeddings_format = parse_embedding_format(awe_format);
      c.awe = awe_config;
      c.awe.weighting = parse_weighting(awe_weighting);
      c.awe.candidates.scorer = parse_scorer(awe_candidate);
      c.awe_cache = awe_cache;
      c.restrict_to_index = awe_restrict;
      return run_single(c, awe_flags.threads);
    }
    if (affect_cmd->parsed()) {
      AffectLexicon::LoadStats lstats;
      const AnalyzerConfig cfg = af_analyzer.config();
      const AffectLexicon lex = load_lexicon(af_lexicon, cfg, &lstats);
      if (lstats.skipped_rows > 0) spdlog::warn("lexicon: {} rows skipped", lstats.skipped_rows);
      if (lstats.duplicates > 0) spdlog::warn("lexicon: {} duplicate words ignored", lstats.duplicates);
      IngestStats istats;
      const AffectReport report =
          score_corpus(af_input, parse_source_format(af_format), lex, cfg, parse_affect_aggregate(af_aggregate), &istats);
      if (!report.means_defined()) spdlog::warn("no document matched any lexicon word; means are undefined");
      const std::string text = report.to_json().dump(2) + "\n";
      if (af_output.empty()) {
        out << text;
      } else {
        std::ofstream f(af_output, std::ios::binary | std::ios::trunc);
        if (!f) throw DataError("cannot write " + af_output);
        f << text;
      }
      return kOk;
    }
    if (eval_cmd->parsed()) {
      const RunFile run = read_run(fs::path(ev_run));
      const Qrels qrels = read_qrels(fs::path(ev_qrels));
      if (qrels.clamped > 0) spdlog::warn("{}: {} negative grades clamped to 0", ev_qrels, qrels.clamped);
      std::vector<MetricResult> results;
      for (const auto& m : ev_metrics) {
        if (m == "map") results.push_back(eval_map(run, qrels, ev_depth));
        else if (m == "ndcg") results.push_back(eval_ndcg(run, qrels, ev_depth));
        else throw ConfigError("--metrics: unknown metric '" + m + "' (expected map,ndcg)");
      }
      for (const auto& r : results) {
        if (r.skipped_unjudged > 0) spdlog::warn("{}: {} run topics have no judgments", r.metric, r.skipped_unjudged);
        if (r.excluded_no_relevant > 0) spdlog::warn("{}: {} topics without relevant documents excluded", r.metric, r.excluded_no_relevant);
      }
      if (ev_output.empty()) {
        write_metrics(results, ev_per_topic, out);
      } else {
        std::ofstream f(ev_output, std::ios::binary | std::ios::trunc);
        if (!f) throw DataError("cannot write " + ev_output);
        write_metrics(results, ev_per_topic, f);
      }
      return kOk;
    }
    if (batch_cmd->parsed()) {
      const auto configs = load_batch_config(batch_config);
      ResourceCache cache;
      std::vector<std::optional<BatchRow>> rows(configs.size());
      std::vector<std::string> errors(configs.size());
      auto work = [&](std::size_t i) {
        try {
          const auto outcome = run_experiment(configs[i], cache, 1);
          report_outcome(outcome);
          if (!outcome.ndcg || !outcome.map) throw ConfigError("no qrels configured or no topics evaluated");
          rows[i] = BatchRow{configs[i].tag, outcome.ndcg->mean, outcome.map->mean};
        } catch (const std::exception& e) {
          errors[i] = e.what();
        }
      };
      const unsigned jobs = std::max(1u, batch_jobs);
      if (jobs == 1) {
        for (std::size_t i = 0; i < configs.size(); ++i) work(i);
      } else {
        std::atomic<std::size_t> next{0};
        std::vector<std::jthread> pool;
        for (unsigned w = 0; w < jobs; ++w) {
          pool.emplace_back([&] {
            for (std::size_t i = next++; i < configs.size(); i = next++) work(i);
          });
        }
      }
      std::vector<BatchRow> table;
      bool failed = false;
      for (std::size_t i = 0; i < configs.size(); ++i) {
        if (rows[i]) {
          table.push_back(*rows[i]);
        } else {
          failed = true;
          spdlog::error("experiment [{}] failed: {}", configs[i].name, errors[i]);
          err << "embir: experiment [" << configs[i].name << "] failed: " << errors[i] << "\n";
        }
      }
      if (batch_output.empty()) {
        write_batch_table(table, out);
      } else {
        std::ofstream f(batch_output, std::ios::binary | std::ios::trunc);
        if (!f) throw DataError("cannot write " + batch_output);
        write_batch_table(table, f);
      }
      return failed ? kDataError : kOk;
    }
  } catch (const ConfigError& e) {
    err << "embir: " << e.what() << "\n";
    return kUsage;
  } catch (const std::exception& e) {
    err << "embir: " << e.what() << "\n";
    return kDataError;
  }
  return kUsage;
}

}  // namespace embir::cli
