#include "embir/awe.hpp"

#include <algorithm>
#include <cmath>
#include <future>
#include <map>
#include <numeric>

#include "binary_io.hpp"
#include "embir/errors.hpp"

namespace embir {

std::string_view to_string(Weighting w) {
  switch (w) {
    case Weighting::mean: return "mean";
    case Weighting::tfidf_weighted: return "tfidf_weighted";
    case Weighting::tfidf_divided: return "tfidf_divided";
  }
  return "?";
}

Weighting parse_weighting(std::string_view name) {
  if (name == "mean") return Weighting::mean;
  if (name == "tfidf_weighted") return Weighting::tfidf_weighted;
  if (name == "tfidf_divided") return Weighting::tfidf_divided;
  throw ConfigError("unknown weighting '" + std::string(name) + "' (expected mean|tfidf_weighted|tfidf_divided)");
}

namespace {

// One distinct word of a text: its row in the store, its count in the text
// and its idf when the index knows it.
struct WeightedWord {
  EmbeddingStore::Ordinal row;
  double count;
  std::optional<double> idf;
};

std::optional<DenseVector> combine(std::span<const WeightedWord> words, const EmbeddingStore& store,
                                   Weighting weighting) {
  DenseVector v(store.dim(), 0.0);
  double total = 0.0;
  bool any = false;
  for (const auto& w : words) {
    double coeff = 0.0;
    switch (weighting) {
      case Weighting::mean:
        coeff = w.count;
        total += w.count;
        break;
      case Weighting::tfidf_weighted:
        if (!w.idf) continue;
        coeff = w.count * *w.idf;
        total += coeff;
        break;
      case Weighting::tfidf_divided:
        if (!w.idf) continue;
        coeff = 1.0 / (w.count * *w.idf);
        break;
    }
    any = true;
    const auto row = store.vector(w.row);
    for (std::size_t i = 0; i < v.size(); ++i) v[i] += coeff * static_cast<double>(row[i]);
  }
  if (!any) return std::nullopt;
  if (weighting == Weighting::tfidf_divided) {
    double sq = 0.0;
    for (const double x : v) sq += x * x;
    if (sq == 0.0) return std::nullopt;
    total = std::sqrt(sq);
  }
  for (double& x : v) x /= total;
  return v;
}

}  // namespace

std::optional<DenseVector> text_vector(std::span<const std::string> terms, const EmbeddingStore& store,
                                       const Index& index, Weighting weighting) {
  std::map<std::string_view, std::uint32_t> counts;
  for (const auto& t : terms) ++counts[t];
  std::vector<WeightedWord> words;
  for (const auto& [term, count] : counts) {
    const auto row = store.ordinal(term);
    if (!row) continue;
    const auto id = index.term_id(term);
    words.push_back({*row, static_cast<double>(count), id ? std::optional<double>(index.idf(*id)) : std::nullopt});
  }
  return combine(words, store, weighting);
}

std::optional<double> vector_cosine(std::span<const double> a, std::span<const double> b) {
  double ab = 0.0;
  double aa = 0.0;
  double bb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    ab += a[i] * b[i];
    aa += a[i] * a[i];
    bb += b[i] * b[i];
  }
  if (aa == 0.0 || bb == 0.0) return std::nullopt;
  return std::clamp(ab / (std::sqrt(aa) * std::sqrt(bb)), -1.0, 1.0);
}

// --- AweScorer ---------------------------------------------------------------

AweScorer::AweScorer(const Index& index, const EmbeddingStore& store, AweConfig config, const DocVectors* precomputed)
    : index_(index), store_(store), config_(config), precomputed_(precomputed), forward_(index) {
  config_.candidates.validate();
  term_to_store_.reserve(index.num_terms());
  for (TermId t = 0; t < index.num_terms(); ++t) term_to_store_.push_back(store.ordinal(index.term(t)));
  by_doc_id_.resize(index.num_docs());
  std::iota(by_doc_id_.begin(), by_doc_id_.end(), DocOrdinal{0});
  std::sort(by_doc_id_.begin(), by_doc_id_.end(),
            [&](DocOrdinal a, DocOrdinal b) { return index.doc_id(a) < index.doc_id(b); });
  if (precomputed_ != nullptr && precomputed_->size() != index.num_docs()) {
    throw DataError("precomputed document vectors do not match the index");
  }
}

std::optional<DenseVector> AweScorer::query_vector(std::span<const std::string> terms) const {
  return text_vector(terms, store_, index_, config_.weighting);
}

std::optional<DenseVector> AweScorer::doc_vector(DocOrdinal doc) const {
  if (precomputed_ != nullptr) {
    const auto v = precomputed_->vector(doc);
    if (!v) return std::nullopt;
    return DenseVector(v->begin(), v->end());
  }
  std::vector<WeightedWord> words;
  for (const DocTerm& dt : forward_.terms(doc)) {
    if (const auto row = term_to_store_[dt.term]) words.push_back({*row, static_cast<double>(dt.tf), index_.idf(dt.term)});
  }
  return combine(words, store_, config_.weighting);
}

std::vector<DocOrdinal> AweScorer::candidates(std::span<const std::string> terms) const {
  std::vector<DocOrdinal> out;
  if (config_.rerank_depth == 0) {
    out.resize(index_.num_docs());
    std::iota(out.begin(), out.end(), DocOrdinal{0});
    return out;
  }
  if (index_.num_docs() == 0) return out;
  const Ranking ranked = score_terms(terms, index_, config_.candidates, index_.num_docs());
  std::vector<char> taken(index_.num_docs(), 0);
  for (const auto& sd : ranked) {
    if (out.size() == config_.rerank_depth) return out;
    const DocOrdinal d = *index_.doc_ordinal(sd.doc_id);
    taken[d] = 1;
    out.push_back(d);
  }
  for (const DocOrdinal d : by_doc_id_) {
    if (out.size() == config_.rerank_depth) break;
    if (!taken[d]) out.push_back(d);
  }
  return out;
}

AweResult AweScorer::score(std::span<const std::string> terms, std::size_t k) const {
  if (k == 0) throw ConfigError("result depth k must be >= 1");
  AweResult result;
  const auto qv = query_vector(terms);
  if (!qv) {
    result.fallback = true;
    result.ranking = score_terms(terms, index_, config_.candidates, k);
    return result;
  }
  for (const DocOrdinal d : candidates(terms)) {
    double score = kAbsentScore;
    if (precomputed_ != nullptr) {
      if (const auto dv = precomputed_->vector(d)) score = vector_cosine(*qv, *dv).value_or(kAbsentScore);
    } else if (const auto dv = doc_vector(d)) {
      score = vector_cosine(*qv, *dv).value_or(kAbsentScore);
    }
    result.ranking.push_back({index_.doc_id(d), score});
  }
  sort_ranking(result.ranking);
  if (result.ranking.size() > k) result.ranking.resize(k);
  return result;
}

AweResult score_awe(std::span<const std::string> query, const Index& index, const EmbeddingStore& store,
                    const AweConfig& config, std::size_t k) {
  return AweScorer(index, store, config).score(query, k);
}

// --- DocVectors --------------------------------------------------------------

namespace {
constexpr std::string_view kAweMagic = "EMBIRAWE";
}

DocVectors DocVectors::compute(const Index& index, const EmbeddingStore& store, Weighting weighting,
                               unsigned threads) {
  AweConfig cfg;
  cfg.weighting = weighting;
  const AweScorer scorer(index, store, cfg);
  DocVectors dv;
  dv.index_fingerprint_ = index.fingerprint();
  dv.store_fingerprint_ = store.fingerprint();
  dv.weighting_ = weighting;
  dv.dim_ = store.dim();
  const std::size_t n = index.num_docs();
  dv.present_.assign(n, 0);
  dv.data_.assign(n * dv.dim_, 0.0);
  auto fill = [&](std::size_t begin, std::size_t end) {
    for (std::size_t d = begin; d < end; ++d) {
      if (const auto v = scorer.doc_vector(static_cast<DocOrdinal>(d))) {
        dv.present_[d] = 1;
        std::copy(v->begin(), v->end(), dv.data_.begin() + static_cast<std::ptrdiff_t>(d * dv.dim_));
      }
    }
  };
  threads = std::max(1u, threads);
  if (threads == 1 || n < 2 * threads) {
    fill(0, n);
  } else {
    std::vector<std::future<void>> parts;
    const std::size_t chunk = (n + threads - 1) / threads;
    for (std::size_t begin = 0; begin < n; begin += chunk) {
      parts.push_back(std::async(std::launch::async, fill, begin, std::min(n, begin + chunk)));
    }
    for (auto& p : parts) p.get();
  }
  return dv;
}

std::optional<std::span<const double>> DocVectors::vector(DocOrdinal doc) const {
  if (!present_[doc]) return std::nullopt;
  return std::span<const double>(data_).subspan(std::size_t{doc} * dim_, dim_);
}

void DocVectors::save(const std::filesystem::path& path) const {
  io::ByteWriter w;
  w.str(index_fingerprint_);
  w.str(store_fingerprint_);
  w.u32(static_cast<std::uint32_t>(weighting_));
  w.varint(dim_);
  w.varint(present_.size());
  for (std::size_t d = 0; d < present_.size(); ++d) {
    w.u32(present_[d] ? 1 : 0);
    if (!present_[d]) continue;
    for (std::size_t i = 0; i < dim_; ++i) w.f64(data_[d * dim_ + i]);
  }
  io::write_envelope(path, kAweMagic, kFormatVersion, w.data());
}

DocVectors DocVectors::load(const std::filesystem::path& path, const Index& index, const EmbeddingStore& store,
                            Weighting weighting) {
  const std::string payload = io::read_envelope(path, kAweMagic, kFormatVersion, "document vector cache");
  io::ByteReader r(payload);
  DocVectors dv;
  dv.index_fingerprint_ = r.str();
  dv.store_fingerprint_ = r.str();
  dv.weighting_ = static_cast<Weighting>(r.u32());
  dv.dim_ = r.varint();
  if (dv.index_fingerprint_ != index.fingerprint() || dv.store_fingerprint_ != store.fingerprint() ||
      dv.weighting_ != weighting || dv.dim_ != store.dim()) {
    throw DataError(path.string() + ": document vector cache was built for a different index, store or weighting");
  }
  const auto n = r.varint();
  if (n != index.num_docs()) throw DataError(path.string() + ": document vector cache has the wrong document count");
  dv.present_.assign(n, 0);
  dv.data_.assign(n * dv.dim_, 0.0);
  for (std::size_t d = 0; d < n; ++d) {
    dv.present_[d] = r.u32() != 0 ? 1 : 0;
    if (!dv.present_[d]) continue;
    for (std::size_t i = 0; i < dv.dim_; ++i) dv.data_[d * dv.dim_ + i] = r.f64();
  }
  if (!r.done()) throw ChecksumError(path.string() + ": trailing bytes in document vector cache");
  return dv;
}

DocVectors DocVectors::load_or_compute(const std::filesystem::path& path, const Index& index,
                                       const EmbeddingStore& store, Weighting weighting, unsigned threads) {
  std::error_code ec;
  if (std::filesystem::exists(path, ec)) {
    try {
      return load(path, index, store, weighting);
    } catch (const DataError&) {
      // Stale or corrupt sidecar: rebuild below.
    }
  }
  DocVectors dv = compute(index, store, weighting, threads);
  dv.save(path);
  return dv;
}

PipelineResult run_awe_pipeline(std::span<const Topic> topics, const Index& index, const EmbeddingStore& store,
                                const AweRunOptions& options) {
  std::optional<DocVectors> cached;
  if (!options.cache_path.empty()) {
    cached = DocVectors::load_or_compute(options.cache_path, index, store, options.awe.weighting, options.threads);
  }
  const AweScorer scorer(index, store, options.awe, cached ? &*cached : nullptr);
  return run_topics(topics, options.tag, options.threads, [&](const Topic& topic) {
    const auto terms = index.analyze(query_text(topic, options.field));
    if (terms.empty()) throw DataError("query analyzes to no terms");
    AweResult r = scorer.score(terms, options.depth);
    return TopicOutcome{std::move(r.ranking), r.fallback ? "no query vector; candidate scorer order used" : ""};
  });
}

}  // namespace embir
