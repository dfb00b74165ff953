#include "embir/index.hpp"

#include <algorithm>
#include <cmath>
#include <future>
#include <thread>

#include "binary_io.hpp"
#include "embir/errors.hpp"
#include "embir/hashing.hpp"

namespace embir {

namespace {
constexpr std::string_view kIndexMagic = "EMBIRIDX";

unsigned resolve_threads(unsigned threads) {
  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  return threads;
}

// Analyzes a batch of documents on up to `threads` workers.
std::vector<std::vector<std::string>> analyze_batch(const Analyzer& analyzer, std::span<const RawDocument> docs,
                                                    unsigned threads) {
  std::vector<std::vector<std::string>> out(docs.size());
  threads = std::min<unsigned>(resolve_threads(threads), static_cast<unsigned>(std::max<std::size_t>(1, docs.size())));
  if (threads <= 1) {
    for (std::size_t i = 0; i < docs.size(); ++i) out[i] = analyzer.analyze(indexable_text(docs[i]));
    return out;
  }
  std::vector<std::future<void>> workers;
  for (unsigned w = 0; w < threads; ++w) {
    workers.push_back(std::async(std::launch::async, [&, w] {
      for (std::size_t i = w; i < docs.size(); i += threads) out[i] = analyzer.analyze(indexable_text(docs[i]));
    }));
  }
  for (auto& f : workers) f.get();
  return out;
}
}  // namespace

std::string indexable_text(const RawDocument& doc) {
  if (doc.source_format == SourceFormat::cacm || doc.title.empty()) return doc.body;
  return doc.title + "\n" + doc.body;
}

// --- Index -------------------------------------------------------------------

void Index::require_analyzer(const AnalyzerConfig& config) const {
  const std::string fp = config.fingerprint();
  if (fp != analyzer_fingerprint_) {
    throw FingerprintError("analyzer fingerprint mismatch: index was built with " + analyzer_fingerprint_ + " (" +
                           analyzer_.canonical() + ") but the query analyzer is " + fp + " (" +
                           config.canonical() + ")");
  }
}

std::vector<std::string> Index::analyze(std::string_view text) const { return Analyzer(analyzer_).analyze(text); }

IndexStats Index::stats() const { return {num_docs(), total_tokens_, avg_doc_len()}; }

double Index::avg_doc_len() const {
  return doc_ids_.empty() ? 0.0 : static_cast<double>(total_tokens_) / static_cast<double>(doc_ids_.size());
}

std::optional<TermId> Index::term_id(std::string_view term) const {
  const auto it = term_lookup_.find(std::string(term));
  if (it == term_lookup_.end()) return std::nullopt;
  return it->second;
}

std::span<const Posting> Index::postings(TermId id) const {
  return std::span<const Posting>(postings_).subspan(offsets_[id], offsets_[id + 1] - offsets_[id]);
}

std::uint32_t Index::tf(TermId id, DocOrdinal doc) const {
  const auto list = postings(id);
  const auto it = std::lower_bound(list.begin(), list.end(), doc,
                                   [](const Posting& p, DocOrdinal d) { return p.doc < d; });
  return (it != list.end() && it->doc == doc) ? it->tf : 0;
}

double Index::idf(TermId id) const {
  return std::log((static_cast<double>(num_docs()) + 1.0) / (static_cast<double>(df(id)) + 1.0)) + 1.0;
}

std::optional<DocOrdinal> Index::doc_ordinal(std::string_view doc_id) const {
  const auto it = doc_lookup_.find(std::string(doc_id));
  if (it == doc_lookup_.end()) return std::nullopt;
  return it->second;
}

bool Index::operator==(const Index& other) const { return serialize_payload() == other.serialize_payload(); }

void Index::finalize() {
  analyzer_ = analyzer_.normalized();
  analyzer_fingerprint_ = analyzer_.fingerprint();
  term_lookup_.clear();
  term_lookup_.reserve(terms_.size());
  for (TermId i = 0; i < terms_.size(); ++i) term_lookup_.emplace(terms_[i], i);
  doc_lookup_.clear();
  doc_lookup_.reserve(doc_ids_.size());
  for (DocOrdinal i = 0; i < doc_ids_.size(); ++i) doc_lookup_.emplace(doc_ids_[i], i);
  Sha256 h;
  h.update(serialize_payload());
  fingerprint_ = h.hex_digest().substr(0, 16);
}

std::string Index::serialize_payload() const {
  io::ByteWriter w;
  w.u32(analyzer_.lowercase ? 1 : 0);
  w.u32(analyzer_.stemmer == Stemmer::porter ? 1 : 0);
  w.varint(analyzer_.stopwords.size());
  for (const auto& s : analyzer_.stopwords) w.str(s);

  w.varint(doc_ids_.size());
  w.varint(total_tokens_);
  for (std::size_t d = 0; d < doc_ids_.size(); ++d) {
    w.str(doc_ids_[d]);
    w.varint(doc_lengths_[d]);
  }

  // Dictionary: term, df, cf, byte offset into the postings region.
  io::ByteWriter region;
  w.varint(terms_.size());
  for (TermId t = 0; t < terms_.size(); ++t) {
    w.str(terms_[t]);
    w.varint(df(t));
    w.varint(cf_[t]);
    w.varint(region.data().size());
    DocOrdinal prev = 0;
    bool first = true;
    for (const Posting& p : postings(t)) {
      region.varint(first ? p.doc : p.doc - prev);
      region.varint(p.tf);
      prev = p.doc;
      first = false;
    }
  }
  w.varint(region.data().size());
  w.bytes(region.data());
  return w.take();
}

Index Index::deserialize_payload(std::string_view payload) {
  io::ByteReader r(payload);
  Index ix;
  ix.analyzer_.lowercase = r.u32() != 0;
  ix.analyzer_.stemmer = r.u32() != 0 ? Stemmer::porter : Stemmer::none;
  const auto num_stop = r.varint();
  for (std::uint64_t i = 0; i < num_stop; ++i) ix.analyzer_.stopwords.push_back(r.str());

  const auto num_docs = r.varint();
  ix.total_tokens_ = r.varint();
  ix.doc_ids_.reserve(num_docs);
  ix.doc_lengths_.reserve(num_docs);
  for (std::uint64_t d = 0; d < num_docs; ++d) {
    ix.doc_ids_.push_back(r.str());
    ix.doc_lengths_.push_back(static_cast<std::uint32_t>(r.varint()));
  }

  const auto num_terms = r.varint();
  std::vector<std::uint64_t> dfs;
  std::vector<std::uint64_t> region_offsets;
  ix.terms_.reserve(num_terms);
  for (std::uint64_t t = 0; t < num_terms; ++t) {
    ix.terms_.push_back(r.str());
    dfs.push_back(r.varint());
    ix.cf_.push_back(r.varint());
    region_offsets.push_back(r.varint());
  }
  const auto region_size = r.varint();
  io::ByteReader region(r.bytes(region_size));
  if (!r.done()) throw ChecksumError("index payload has trailing bytes");

  for (std::uint64_t t = 0; t < num_terms; ++t) {
    if (region.position() != region_offsets[t]) throw ChecksumError("postings offset mismatch");
    DocOrdinal doc = 0;
    for (std::uint64_t i = 0; i < dfs[t]; ++i) {
      const auto gap = region.varint();
      doc = static_cast<DocOrdinal>(i == 0 ? gap : doc + gap);
      const auto tf = static_cast<std::uint32_t>(region.varint());
      if (doc >= num_docs || tf == 0) throw ChecksumError("corrupt posting");
      ix.postings_.push_back({doc, tf});
    }
    ix.offsets_.push_back(ix.postings_.size());
  }
  ix.finalize();
  return ix;
}

void Index::save(const std::filesystem::path& path) const {
  io::write_envelope(path, kIndexMagic, kFormatVersion, serialize_payload());
}

Index Index::load(const std::filesystem::path& path) {
  const std::string payload = io::read_envelope(path, kIndexMagic, kFormatVersion, "index");
  try {
    return deserialize_payload(payload);
  } catch (const ChecksumError& e) {
    throw ChecksumError(path.string() + ": checksum error: " + e.what());
  }
}

// --- building ----------------------------------------------------------------

IndexBuilder::IndexBuilder(AnalyzerConfig config) : analyzer_(std::move(config)) {}

void IndexBuilder::add(const RawDocument& doc) {
  const auto terms = analyzer_.analyze(indexable_text(doc));
  add_analyzed(doc.doc_id, terms);
}

void IndexBuilder::add_analyzed(std::string doc_id, std::span<const std::string> terms) {
  const auto ordinal = static_cast<DocOrdinal>(doc_ids_.size());
  if (!doc_lookup_.emplace(doc_id, ordinal).second) {
    throw IngestError("duplicate doc_id '" + doc_id + "' while building index");
  }
  std::unordered_map<std::string_view, std::uint32_t> counts;
  for (const auto& t : terms) ++counts[t];
  for (const auto& [term, tf] : counts) {
    auto it = postings_.find(std::string(term));
    if (it == postings_.end()) it = postings_.emplace(std::string(term), std::vector<Posting>{}).first;
    it->second.push_back({ordinal, tf});
  }
  doc_ids_.push_back(std::move(doc_id));
  doc_lengths_.push_back(static_cast<std::uint32_t>(terms.size()));
  total_tokens_ += terms.size();
}

Index IndexBuilder::finish() && {
  Index ix;
  ix.analyzer_ = analyzer_.config();
  std::vector<std::pair<std::string, std::vector<Posting>>> entries;
  entries.reserve(postings_.size());
  for (auto& [term, list] : postings_) entries.emplace_back(term, std::move(list));
  postings_.clear();
  std::sort(entries.begin(), entries.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
  for (auto& [term, list] : entries) {
    std::uint64_t cf = 0;
    for (const Posting& p : list) cf += p.tf;
    ix.terms_.push_back(term);
    ix.cf_.push_back(cf);
    ix.postings_.insert(ix.postings_.end(), list.begin(), list.end());
    ix.offsets_.push_back(ix.postings_.size());
  }
  ix.doc_ids_ = std::move(doc_ids_);
  ix.doc_lengths_ = std::move(doc_lengths_);
  ix.total_tokens_ = total_tokens_;
  ix.finalize();
  return ix;
}

Index build_index(std::span<const RawDocument> docs, const AnalyzerConfig& config, unsigned threads) {
  IndexBuilder builder(config);
  constexpr std::size_t kBatch = 4096;
  for (std::size_t start = 0; start < docs.size(); start += kBatch) {
    const auto batch = docs.subspan(start, std::min(kBatch, docs.size() - start));
    const auto analyzed = analyze_batch(builder.analyzer(), batch, threads);
    for (std::size_t i = 0; i < batch.size(); ++i) builder.add_analyzed(batch[i].doc_id, analyzed[i]);
  }
  return std::move(builder).finish();
}

Index build_index(const std::filesystem::path& path, SourceFormat format, const AnalyzerConfig& config,
                  IngestStats* stats, unsigned threads) {
  IndexBuilder builder(config);
  std::vector<RawDocument> batch;
  constexpr std::size_t kBatch = 1024;
  auto flush = [&] {
    const auto analyzed = analyze_batch(builder.analyzer(), batch, threads);
    for (std::size_t i = 0; i < batch.size(); ++i) builder.add_analyzed(batch[i].doc_id, analyzed[i]);
    batch.clear();
  };
  const IngestStats s = ingest_collection(path, format, [&](RawDocument&& doc) {
    batch.push_back(std::move(doc));
    if (batch.size() == kBatch) flush();
  });
  flush();
  if (stats != nullptr) *stats = s;
  return std::move(builder).finish();
}

Index merge_indexes(const Index& first, const Index& second) {
  if (first.analyzer_fingerprint() != second.analyzer_fingerprint()) {
    throw FingerprintError("cannot merge indexes built with different analyzers");
  }
  Index ix;
  ix.analyzer_ = first.analyzer_;
  const auto shift = static_cast<DocOrdinal>(first.num_docs());
  std::size_t a = 0;
  std::size_t b = 0;
  auto append = [&](const std::string& term, std::span<const Posting> pa, std::span<const Posting> pb, std::uint64_t cf) {
    ix.terms_.push_back(term);
    ix.cf_.push_back(cf);
    ix.postings_.insert(ix.postings_.end(), pa.begin(), pa.end());
    for (Posting p : pb) ix.postings_.push_back({p.doc + shift, p.tf});
    ix.offsets_.push_back(ix.postings_.size());
  };
  while (a < first.num_terms() || b < second.num_terms()) {
    const auto ta = static_cast<TermId>(a);
    const auto tb = static_cast<TermId>(b);
    if (b == second.num_terms() || (a < first.num_terms() && first.term(ta) < second.term(tb))) {
      append(first.term(ta), first.postings(ta), {}, first.cf(ta));
      ++a;
    } else if (a == first.num_terms() || second.term(tb) < first.term(ta)) {
      append(second.term(tb), {}, second.postings(tb), second.cf(tb));
      ++b;
    } else {
      append(first.term(ta), first.postings(ta), second.postings(tb), first.cf(ta) + second.cf(tb));
      ++a;
      ++b;
    }
  }
  ix.doc_ids_ = first.doc_ids_;
  ix.doc_ids_.insert(ix.doc_ids_.end(), second.doc_ids_.begin(), second.doc_ids_.end());
  ix.doc_lengths_ = first.doc_lengths_;
  ix.doc_lengths_.insert(ix.doc_lengths_.end(), second.doc_lengths_.begin(), second.doc_lengths_.end());
  ix.total_tokens_ = first.total_tokens_ + second.total_tokens_;
  ix.finalize();
  if (ix.doc_lookup_.size() != ix.doc_ids_.size()) throw IngestError("cannot merge indexes with overlapping doc ids");
  return ix;
}

ForwardIndex::ForwardIndex(const Index& index) : offsets_(index.num_docs() + 1, 0) {
  for (TermId t = 0; t < index.num_terms(); ++t) {
    for (const Posting& p : index.postings(t)) ++offsets_[p.doc + 1];
  }
  for (std::size_t d = 0; d < index.num_docs(); ++d) offsets_[d + 1] += offsets_[d];
  entries_.resize(offsets_.back());
  std::vector<std::uint64_t> fill(offsets_.begin(), offsets_.end() - 1);
  for (TermId t = 0; t < index.num_terms(); ++t) {
    for (const Posting& p : index.postings(t)) entries_[fill[p.doc]++] = {t, p.tf};
  }
}

double tfidf_weight(std::string_view term, DocOrdinal doc, const Index& index) {
  const auto id = index.term_id(term);
  const std::uint32_t tf = id ? index.tf(*id, doc) : 0;
  if (tf == 0) {
    throw DataError("term '" + std::string(term) + "' does not occur in document " +
                    (doc < index.num_docs() ? index.doc_id(doc) : std::to_string(doc)));
  }
  return static_cast<double>(tf) * index.idf(*id);
}

}  // namespace embir
