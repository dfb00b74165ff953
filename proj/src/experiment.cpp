#include "embir/experiment.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <ostream>
#include <set>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "embir/errors.hpp"
#include "embir/hashing.hpp"

namespace embir {

namespace fs = std::filesystem;

std::string_view to_string(PipelineKind p) {
  switch (p) {
    case PipelineKind::bm25: return "bm25";
    case PipelineKind::ql: return "ql";
    case PipelineKind::expand: return "expand";
    case PipelineKind::awe: return "awe";
  }
  return "?";
}

PipelineKind parse_pipeline(std::string_view name) {
  if (name == "bm25") return PipelineKind::bm25;
  if (name == "ql") return PipelineKind::ql;
  if (name == "expand") return PipelineKind::expand;
  if (name == "awe") return PipelineKind::awe;
  throw ConfigError("unknown pipeline '" + std::string(name) + "' (expected bm25|ql|expand|awe)");
}

namespace {

double to_real(const std::string& key, const std::string& value) {
  double v = 0.0;
  const auto [p, ec] = std::from_chars(value.data(), value.data() + value.size(), v);
  if (ec != std::errc{} || p != value.data() + value.size()) throw ConfigError("'" + key + "' must be a number, got '" + value + "'");
  return v;
}

std::size_t to_count(const std::string& key, const std::string& value) {
  std::size_t v = 0;
  const auto [p, ec] = std::from_chars(value.data(), value.data() + value.size(), v);
  if (ec != std::errc{} || p != value.data() + value.size()) {
    throw ConfigError("'" + key + "' must be a non-negative integer, got '" + value + "'");
  }
  return v;
}

bool to_bool(const std::string& key, const std::string& value) {
  if (value == "true" || value == "1" || value == "yes") return true;
  if (value == "false" || value == "0" || value == "no") return false;
  throw ConfigError("'" + key + "' must be true or false, got '" + value + "'");
}

fs::path resolve(const fs::path& base, const std::string& value) {
  fs::path p(value);
  if (p.is_relative() && !base.empty()) p = base / p;
  return p.lexically_normal();
}

void require_file(const fs::path& path, const char* key) {
  std::error_code ec;
  if (path.empty()) throw ConfigError(std::string("'") + key + "' is required");
  if (!fs::exists(path, ec)) throw ConfigError(std::string("'") + key + "' file not found: " + path.string());
}

std::string fmt_real(double v) { return fmt::format("{}", v); }

}  // namespace

void apply_setting(ExperimentConfig& c, const std::string& key, const std::string& value, const fs::path& base) {
  if (key == "corpus") c.corpus = resolve(base, value);
  else if (key == "corpus_format") c.corpus_format = parse_source_format(value);
  else if (key == "index") c.index = resolve(base, value);
  else if (key == "embeddings") c.embeddings = resolve(base, value);
  else if (key == "embeddings_format") c.embeddings_format = parse_embedding_format(value);
  else if (key == "restrict_to_index") c.restrict_to_index = to_bool(key, value);
  else if (key == "pipeline") c.pipeline = parse_pipeline(value);
  else if (key == "topics") c.topics = resolve(base, value);
  else if (key == "topic_format") c.topic_format = parse_topic_format(value);
  else if (key == "topic_field") c.topic_field = parse_topic_field(value);
  else if (key == "k1") c.scorer.bm25.k1 = to_real(key, value);
  else if (key == "b") c.scorer.bm25.b = to_real(key, value);
  else if (key == "mu") c.scorer.ql.mu = to_real(key, value);
  else if (key == "scorer") c.scorer.scorer = parse_scorer(value);
  else if (key == "t") c.expansion.t = to_real(key, value);
  else if (key == "k_neighbors") c.expansion.neighbors_per_term = to_count(key, value);
  else if (key == "max_alternatives") c.expansion.max_alternatives = to_count(key, value);
  else if (key == "boolean_mode") c.boolean_mode = parse_boolean_mode(value);
  else if (key == "weighting") c.awe.weighting = parse_weighting(value);
  else if (key == "rerank_depth") c.awe.rerank_depth = to_count(key, value);
  else if (key == "candidate_scorer") c.awe.candidates.scorer = parse_scorer(value);
  else if (key == "awe_cache") c.awe_cache = resolve(base, value);
  else if (key == "depth") c.depth = to_count(key, value);
  else if (key == "qrels") c.qrels = resolve(base, value);
  else if (key == "eval_depth") c.eval_depth = to_count(key, value);
  else if (key == "output") c.output = resolve(base, value);
  else if (key == "tag") c.tag = value;
  else if (key == "lowercase") {
    c.analyzer.lowercase = to_bool(key, value);
    c.analyzer_explicit = true;
  } else if (key == "stemmer") {
    c.analyzer.stemmer = parse_stemmer(value);
    c.analyzer_explicit = true;
  } else if (key == "stopwords") {
    c.analyzer.stopwords = value.empty() ? std::vector<std::string>{} : load_stopwords(resolve(base, value));
    c.analyzer_explicit = true;
  } else {
    throw ConfigError("unknown setting '" + key + "'");
  }
}

void ExperimentConfig::validate() const {
  const std::string where = name.empty() ? std::string() : "experiment [" + name + "]: ";
  try {
    if (tag.empty()) throw ConfigError("'tag' must not be empty");
    if (tag.find_first_of(" \t\n") != std::string::npos) throw ConfigError("'tag' must not contain whitespace");
    if (output.empty()) throw ConfigError("'output' is required");
    require_file(topics, "topics");
    std::error_code ec;
    if (index.empty()) throw ConfigError("'index' is required");
    if (!fs::exists(index, ec)) {
      if (corpus.empty()) throw ConfigError("'index' file not found and no 'corpus' to build it from: " + index.string());
      require_file(corpus, "corpus");
    }
    if (pipeline == PipelineKind::expand || pipeline == PipelineKind::awe) require_file(embeddings, "embeddings");
    if (!qrels.empty()) require_file(qrels, "qrels");
    if (depth == 0) throw ConfigError("'depth' must be >= 1");
    scorer.validate();
    awe.candidates.validate();
    if (pipeline == PipelineKind::expand) expansion.validate();
  } catch (const ConfigError& e) {
    throw ConfigError(where + e.what());
  }
}

std::string ExperimentConfig::canonical() const {
  std::map<std::string, std::string> kv;
  kv["pipeline"] = std::string(to_string(pipeline));
  kv["tag"] = tag;
  kv["index"] = index.generic_string();
  kv["topics"] = topics.generic_string();
  kv["topic_format"] = std::string(to_string(topic_format));
  kv["topic_field"] = topic_field == TopicField::title ? "title" : "title+desc";
  kv["depth"] = std::to_string(depth);
  kv["analyzer"] = analyzer_explicit ? analyzer.canonical() : "index";
  if (!corpus.empty()) {
    kv["corpus"] = corpus.generic_string();
    kv["corpus_format"] = std::string(to_string(corpus_format));
  }
  const auto put_scorer = [&](const std::string& prefix, const ScorerParams& s) {
    kv[prefix + "scorer"] = std::string(to_string(s.scorer));
    if (s.scorer == Scorer::bm25) {
      kv[prefix + "k1"] = fmt_real(s.bm25.k1);
      kv[prefix + "b"] = fmt_real(s.bm25.b);
    } else {
      kv[prefix + "mu"] = fmt_real(s.ql.mu);
    }
  };
  switch (pipeline) {
    case PipelineKind::bm25:
    case PipelineKind::ql: {
      ScorerParams s = scorer;
      s.scorer = pipeline == PipelineKind::bm25 ? Scorer::bm25 : Scorer::ql;
      put_scorer("", s);
      break;
    }
    case PipelineKind::expand:
      put_scorer("", scorer);
      kv["t"] = fmt_real(expansion.t);
      kv["k_neighbors"] = std::to_string(expansion.neighbors_per_term);
      kv["max_alternatives"] = std::to_string(expansion.max_alternatives);
      kv["boolean_mode"] = std::string(to_string(boolean_mode));
      break;
    case PipelineKind::awe:
      put_scorer("candidate_", awe.candidates);
      kv["weighting"] = std::string(to_string(awe.weighting));
      kv["rerank_depth"] = std::to_string(awe.rerank_depth);
      break;
  }
  if (pipeline == PipelineKind::expand || pipeline == PipelineKind::awe) {
    kv["embeddings"] = embeddings.generic_string();
    kv["embeddings_format"] = std::string(to_string(embeddings_format));
    kv["restrict_to_index"] = restrict_to_index ? "true" : "false";
  }
  std::string out;
  for (const auto& [k, v] : kv) out += k + "=" + v + "\n";
  return out;
}

std::string ExperimentConfig::hash() const {
  Sha256 h;
  h.update(canonical());
  return h.hex_digest();
}

std::vector<ExperimentConfig> load_batch_config(const fs::path& path) {
  namespace pt = boost::property_tree;
  pt::ptree tree;
  try {
    pt::read_ini(path.string(), tree);
  } catch (const pt::ini_parser_error& e) {
    throw ConfigError("batch config " + path.string() + ": " + e.what());
  }
  const fs::path base = path.parent_path();
  std::vector<std::pair<std::string, std::string>> defaults;
  if (const auto d = tree.get_child_optional("defaults")) {
    for (const auto& [k, v] : *d) defaults.emplace_back(k, v.data());
  }
  std::vector<ExperimentConfig> out;
  std::set<std::string> tags;
  for (const auto& [section, body] : tree) {
    if (section == "defaults") continue;
    if (body.empty()) throw ConfigError("batch config " + path.string() + ": top-level key '" + section + "' outside a section");
    ExperimentConfig c;
    c.name = section;
    c.tag = section;
    try {
      std::vector<std::pair<std::string, std::string>> settings = defaults;
      for (const auto& [k, v] : body) settings.emplace_back(k, v.data());
      bool has_output = false;
      std::string output_dir;
      for (const auto& [k, v] : settings) {
        if (k == "output_dir") {
          output_dir = v;
          continue;
        }
        has_output = has_output || k == "output";
        apply_setting(c, k, v, base);
      }
      if (!has_output) c.output = resolve(base, (fs::path(output_dir) / (c.tag + ".run")).string());
    } catch (const Error& e) {
      throw ConfigError("batch config " + path.string() + ", section [" + section + "]: " + e.what());
    }
    if (!tags.insert(c.tag).second) throw ConfigError("batch config " + path.string() + ": duplicate tag '" + c.tag + "'");
    out.push_back(std::move(c));
  }
  return out;
}

// --- resources -----------------------------------------------------------------

std::shared_ptr<const Index> ResourceCache::index(const ExperimentConfig& config) {
  const std::lock_guard lock(mutex_);
  const std::string key = config.index.string();
  if (const auto it = indexes_.find(key); it != indexes_.end()) return it->second;
  std::error_code ec;
  std::shared_ptr<const Index> ix;
  if (fs::exists(config.index, ec)) {
    ix = std::make_shared<const Index>(Index::load(config.index));
  } else {
    auto built = std::make_shared<Index>(build_index(config.corpus, config.corpus_format, config.analyzer));
    built->save(config.index);
    ix = std::move(built);
  }
  indexes_.emplace(key, ix);
  return ix;
}

std::shared_ptr<const EmbeddingStore> ResourceCache::embeddings(const fs::path& path, EmbeddingFormat format) {
  const std::lock_guard lock(mutex_);
  const std::string key = path.string() + "|" + std::string(to_string(format));
  if (const auto it = stores_.find(key); it != stores_.end()) return it->second;
  auto store = std::make_shared<const EmbeddingStore>(EmbeddingStore::load(path, format));
  stores_.emplace(key, store);
  return store;
}

// --- running -------------------------------------------------------------------

std::string run_metadata(const ExperimentConfig& config, const PipelineResult& result) {
  nlohmann::ordered_json j;
  j["tag"] = config.tag;
  j["config_hash"] = config.hash();
  j["config"] = config.canonical();
  j["topics_run"] = result.run.topics.size();
  auto failures = nlohmann::ordered_json::array();
  for (const auto& f : result.failures) failures.push_back({{"topic", f.topic_id}, {"error", f.message}});
  j["failures"] = std::move(failures);
  j["notes"] = result.notes;
  return j.dump(2) + "\n";
}

ExperimentOutcome run_experiment(const ExperimentConfig& config, ResourceCache& cache, unsigned threads) {
  config.validate();
  const auto index = cache.index(config);
  if (config.analyzer_explicit) index->require_analyzer(config.analyzer);
  std::vector<IngestIssue> issues;
  const auto topics = ingest_topics(config.topics, config.topic_format, &issues);

  ExperimentOutcome out;
  switch (config.pipeline) {
    case PipelineKind::bm25:
    case PipelineKind::ql: {
      LexicalRunOptions o;
      o.scorer = config.scorer;
      o.scorer.scorer = config.pipeline == PipelineKind::bm25 ? Scorer::bm25 : Scorer::ql;
      o.depth = config.depth;
      o.tag = config.tag;
      o.field = config.topic_field;
      o.threads = threads;
      out.result = run_lexical_pipeline(topics, *index, o);
      break;
    }
    case PipelineKind::expand:
    case PipelineKind::awe: {
      auto store = cache.embeddings(config.embeddings, config.embeddings_format);
      if (config.restrict_to_index) store = std::make_shared<const EmbeddingStore>(store->restricted_to(*index));
      if (config.pipeline == PipelineKind::expand) {
        ExpansionRunOptions o;
        o.expansion = config.expansion;
        o.scorer = config.scorer;
        o.mode = config.boolean_mode;
        o.depth = config.depth;
        o.tag = config.tag;
        o.field = config.topic_field;
        o.threads = threads;
        out.result = run_expansion_pipeline(topics, *index, *store, o);
      } else {
        AweRunOptions o;
        o.awe = config.awe;
        o.depth = config.depth;
        o.tag = config.tag;
        o.field = config.topic_field;
        o.threads = threads;
        o.cache_path = config.awe_cache;
        out.result = run_awe_pipeline(topics, *index, *store, o);
      }
      break;
    }
  }
  for (const auto& issue : issues) out.result.failures.push_back({"?", issue.message});

  if (config.output.has_parent_path()) fs::create_directories(config.output.parent_path());
  write_run(out.result.run, config.output);
  std::ofstream meta(config.output.string() + ".meta", std::ios::binary | std::ios::trunc);
  meta << run_metadata(config, out.result);

  if (!config.qrels.empty() && !out.result.run.topics.empty()) {
    const Qrels qrels = read_qrels(config.qrels);
    out.ndcg = eval_ndcg(out.result.run, qrels, config.eval_depth);
    out.map = eval_map(out.result.run, qrels, config.eval_depth);
  }
  return out;
}

void write_batch_table(const std::vector<BatchRow>& rows, std::ostream& out) {
  out << "tag\tNDCG\tMAP\n";
  for (const auto& r : rows) out << fmt::format("{}\t{:.4f}\t{:.4f}\n", r.tag, r.ndcg, r.map);
}

}  // namespace embir
