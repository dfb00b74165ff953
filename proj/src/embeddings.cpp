#include "embir/embeddings.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>

#include "embir/errors.hpp"
#include "embir/hashing.hpp"
#include "embir/index.hpp"

namespace embir {

std::string_view to_string(EmbeddingFormat f) {
  return f == EmbeddingFormat::word2vec_text ? "word2vec_text" : "glove_text";
}

EmbeddingFormat parse_embedding_format(std::string_view name) {
  if (name == "glove_text" || name == "glove") return EmbeddingFormat::glove_text;
  if (name == "word2vec_text" || name == "word2vec") return EmbeddingFormat::word2vec_text;
  throw ConfigError("unknown embedding format '" + std::string(name) + "' (expected glove_text|word2vec_text)");
}

namespace {

double dot(std::span<const float> a, std::span<const float> b) {
  double sum = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) sum += static_cast<double>(a[i]) * static_cast<double>(b[i]);
  return sum;
}

// Splits on spaces/tabs.
void split_fields(std::string_view line, std::vector<std::string_view>& out) {
  out.clear();
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && (line[i] == ' ' || line[i] == '\t')) ++i;
    if (i >= line.size()) break;
    const std::size_t start = i;
    while (i < line.size() && line[i] != ' ' && line[i] != '\t') ++i;
    out.push_back(line.substr(start, i - start));
  }
}

bool parse_float(std::string_view s, float& out) {
  const auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  return ec == std::errc{} && p == s.data() + s.size() && std::isfinite(out);
}

}  // namespace

void EmbeddingStore::finalize() {
  lookup_.clear();
  lookup_.reserve(words_.size());
  for (Ordinal i = 0; i < words_.size(); ++i) lookup_.emplace(words_[i], i);
  inv_norms_.assign(words_.size(), 0.0);
  Sha256 h;
  h.update_u64(dim_);
  h.update_u64(words_.size());
  for (Ordinal i = 0; i < words_.size(); ++i) {
    const auto row = vector(i);
    const double sq = dot(row, row);
    inv_norms_[i] = sq > 0.0 ? 1.0 / std::sqrt(sq) : 0.0;
    h.update_field(words_[i]);
    h.update(std::as_bytes(row));
  }
  fingerprint_ = h.hex_digest().substr(0, 16);
}

EmbeddingStore EmbeddingStore::from_rows(std::vector<std::string> words, const std::vector<std::vector<float>>& rows) {
  if (words.size() != rows.size()) throw DataError("embedding rows and words differ in count");
  EmbeddingStore s;
  s.dim_ = rows.empty() ? 0 : rows.front().size();
  if (!rows.empty() && s.dim_ == 0) throw DataError("embedding dimension must be >= 1");
  s.matrix_.reserve(rows.size() * s.dim_);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i].size() != s.dim_) throw DataError("embedding row for '" + words[i] + "' has the wrong dimension");
    for (const float v : rows[i]) {
      if (!std::isfinite(v)) throw DataError("embedding row for '" + words[i] + "' has a non-finite entry");
    }
    s.matrix_.insert(s.matrix_.end(), rows[i].begin(), rows[i].end());
  }
  s.words_ = std::move(words);
  s.finalize();
  if (s.lookup_.size() != s.words_.size()) throw DataError("duplicate word in embedding rows");
  return s;
}

EmbeddingStore EmbeddingStore::load(const std::filesystem::path& path, EmbeddingFormat format,
                                    EmbeddingLoadStats* stats_out) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open embeddings file " + path.string());
  EmbeddingLoadStats stats;
  EmbeddingStore s;
  std::vector<std::string_view> fields;
  std::vector<float> row;
  std::string line;
  bool first_line = true;

  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    split_fields(line, fields);
    if (fields.empty()) continue;
    if (first_line && format == EmbeddingFormat::word2vec_text) {
      first_line = false;
      std::uint64_t vocab = 0;
      std::uint64_t dim = 0;
      const bool ok = fields.size() == 2 &&
                      std::from_chars(fields[0].data(), fields[0].data() + fields[0].size(), vocab).ec == std::errc{} &&
                      std::from_chars(fields[1].data(), fields[1].data() + fields[1].size(), dim).ec == std::errc{};
      if (!ok || dim == 0) throw DataError(path.string() + ": word2vec_text file must start with a 'vocab_size dim' header");
      stats.header_vocab = vocab;
      s.dim_ = dim;
      continue;
    }
    first_line = false;
    if (fields.size() < 2) {
      ++stats.skipped_rows;
      continue;
    }
    const std::size_t d = fields.size() - 1;
    if (s.dim_ == 0) s.dim_ = d;
    if (d != s.dim_) {
      ++stats.skipped_rows;
      continue;
    }
    row.resize(d);
    bool numeric = true;
    for (std::size_t i = 0; i < d && numeric; ++i) numeric = parse_float(fields[i + 1], row[i]);
    if (!numeric) {
      ++stats.skipped_rows;
      continue;
    }
    std::string word(fields[0]);
    if (s.lookup_.contains(word)) {
      ++stats.duplicate_words;
      continue;
    }
    s.lookup_.emplace(word, static_cast<Ordinal>(s.words_.size()));
    s.words_.push_back(std::move(word));
    s.matrix_.insert(s.matrix_.end(), row.begin(), row.end());
  }
  if (s.words_.empty()) throw DataError(path.string() + ": embeddings file contains no usable vectors");
  s.finalize();
  stats.rows = s.words_.size();
  for (Ordinal i = 0; i < s.words_.size(); ++i) stats.zero_rows += s.is_zero(i) ? 1 : 0;
  if (stats.header_vocab) {
    stats.header_mismatch = *stats.header_vocab != stats.rows + stats.skipped_rows + stats.duplicate_words;
  }
  if (stats_out != nullptr) *stats_out = stats;
  return s;
}

std::optional<EmbeddingStore::Ordinal> EmbeddingStore::ordinal(std::string_view word) const {
  const auto it = lookup_.find(std::string(word));
  if (it == lookup_.end()) return std::nullopt;
  return it->second;
}

std::vector<double> EmbeddingStore::unit_vector(Ordinal i) const {
  const auto row = vector(i);
  std::vector<double> out(row.size());
  for (std::size_t k = 0; k < row.size(); ++k) out[k] = static_cast<double>(row[k]) * inv_norms_[i];
  return out;
}

double EmbeddingStore::cosine(Ordinal a, Ordinal b) const {
  if (a == b) return 1.0;
  const double c = dot(vector(a), vector(b)) * (inv_norms_[a] * inv_norms_[b]);
  return std::clamp(c, -1.0, 1.0);
}

Similarity EmbeddingStore::cosine(std::string_view a, std::string_view b) const {
  const auto ia = ordinal(a);
  const auto ib = ordinal(b);
  if (!ia || !ib) return {SimilarityStatus::oov, 0.0};
  if (is_zero(*ia) || is_zero(*ib)) return {SimilarityStatus::zero_vector, 0.0};
  return {SimilarityStatus::ok, cosine(*ia, *ib)};
}

std::optional<std::vector<Neighbor>> EmbeddingStore::nearest_neighbors(std::string_view word, std::size_t k,
                                                                       double min_cos) const {
  const auto q = ordinal(word);
  if (!q) return std::nullopt;
  std::vector<Neighbor> out;
  if (k == 0 || is_zero(*q)) return out;

  struct Hit {
    double cos;
    Ordinal ord;
  };
  const auto better = [](const Hit& x, const Hit& y) { return x.cos != y.cos ? x.cos > y.cos : x.ord < y.ord; };
  // Bounded heap of the k best hits; the worst sits at the front.
  std::vector<Hit> heap;
  heap.reserve(std::min(k, size()) + 1);
  for (Ordinal i = 0; i < size(); ++i) {
    if (i == *q || is_zero(i)) continue;
    const double c = cosine(*q, i);
    if (!(c > min_cos)) continue;
    const Hit h{c, i};
    if (heap.size() < k) {
      heap.push_back(h);
      std::push_heap(heap.begin(), heap.end(), better);
    } else if (better(h, heap.front())) {
      std::pop_heap(heap.begin(), heap.end(), better);
      heap.back() = h;
      std::push_heap(heap.begin(), heap.end(), better);
    }
  }
  std::sort(heap.begin(), heap.end(), better);
  out.reserve(heap.size());
  for (const Hit& h : heap) out.push_back({words_[h.ord], h.cos});
  return out;
}

EmbeddingStore EmbeddingStore::restricted_to(const Index& index) const {
  EmbeddingStore s;
  s.dim_ = dim_;
  for (Ordinal i = 0; i < size(); ++i) {
    if (!index.term_id(words_[i])) continue;
    s.words_.push_back(words_[i]);
    const auto row = vector(i);
    s.matrix_.insert(s.matrix_.end(), row.begin(), row.end());
  }
  s.finalize();
  return s;
}

}  // namespace embir
