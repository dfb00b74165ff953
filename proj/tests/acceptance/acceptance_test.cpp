// Acceptance checks: one PASS/FAIL/SKIP line per criterion, non-zero exit on
// any failure.

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <functional>
#include <iostream>
#include <map>
#include <random>
#include <sstream>

#include <fmt/format.h>

#include "embir/affect.hpp"
#include "embir/awe.hpp"
#include "embir/cli.hpp"
#include "embir/evaluation.hpp"
#include "embir/expansion.hpp"
#include "fixture.hpp"
#include "oracles.hpp"

namespace fs = std::filesystem;
using namespace embir;
using Terms = std::vector<std::string>;

namespace {

struct Skip {
  std::string reason;
};

/// Collects failed expectations; a criterion passes when none were recorded.
class Check {
 public:
  void expect(bool ok, const std::string& what) {
    if (!ok && problems_.size() < 5) problems_.push_back(what);
    failed_ = failed_ || !ok;
  }
  void near(double got, double want, double tol, const std::string& what) {
    expect(std::abs(got - want) <= tol, fmt::format("{}: got {:.17g}, want {:.17g}", what, got, want));
  }
  void within(double seconds, double limit) {
    expect(seconds < limit, fmt::format("runtime {:.2f} s exceeds {:.0f} s", seconds, limit));
  }
  bool failed() const { return failed_; }
  const std::vector<std::string>& problems() const { return problems_; }

 private:
  bool failed_ = false;
  std::vector<std::string> problems_;
};

double seconds_since(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

std::vector<oracle::Doc> oracle_docs(const std::vector<RawDocument>& docs) {
  std::vector<oracle::Doc> out;
  for (const auto& d : docs) out.push_back({d.doc_id, analyze(indexable_text(d), {})});
  return out;
}

void compare_ranking(Check& c, const Ranking& got, const std::vector<oracle::Scored>& want, double rel_tol,
                     const std::string& label) {
  c.expect(got.size() == want.size(), fmt::format("{}: {} results, oracle has {}", label, got.size(), want.size()));
  for (std::size_t i = 0; i < std::min(got.size(), want.size()); ++i) {
    c.expect(got[i].doc_id == want[i].id,
             fmt::format("{}: rank {} is {}, oracle has {}", label, i + 1, got[i].doc_id, want[i].id));
    c.expect(std::abs(got[i].score - want[i].score) <= rel_tol * std::max(1.0, std::abs(want[i].score)),
             fmt::format("{}: rank {} score {:.17g} vs {:.17g}", label, i + 1, got[i].score, want[i].score));
  }
}

// 1. BM25 and QL equal a per-document brute-force evaluation.
void lexical_oracle(Check& c) {
  const auto start = std::chrono::steady_clock::now();
  std::mt19937_64 rng(1001);
  std::uniform_int_distribution<std::size_t> docs_n(20, 100), vocab_n(10, 50);
  for (int corpus = 0; corpus < 5; ++corpus) {
    const std::size_t vocab = vocab_n(rng);
    const auto docs = testing::random_corpus(rng, docs_n(rng), vocab, 30);
    const auto ix = build_index(docs, {});
    const auto odocs = oracle_docs(docs);
    for (int q = 0; q < 20; ++q) {
      const auto query = testing::random_query(rng, vocab, 5);
      const std::string label = fmt::format("corpus {} query {}", corpus, q);
      compare_ranking(c, score_bm25(query, ix, {}, 1000), oracle::bm25(odocs, query, 0.9, 0.4), 1e-9, "bm25 " + label);
      compare_ranking(c, score_ql(query, ix, {}, 1000), oracle::ql(odocs, query, 1000.0), 1e-9, "ql " + label);
    }
  }
  c.within(seconds_since(start), 10);
}

// 2. nearest_neighbors equals an exhaustive scan.
void knn_exact(Check& c) {
  const auto start = std::chrono::steady_clock::now();
  testing::TempDir dir;
  std::mt19937_64 rng(2002);
  const auto words = testing::vocabulary(1000);
  testing::write_random_glove(dir / "v.txt", words, 50, rng);
  const auto store = EmbeddingStore::load(dir / "v.txt", EmbeddingFormat::glove_text);

  // Independent copy of the vectors, read back from the file.
  std::map<std::string, std::vector<double>> vectors;
  std::ifstream in(dir / "v.txt");
  std::string line;
  while (std::getline(in, line)) {
    std::istringstream row(line);
    std::string w;
    row >> w;
    float x;
    while (row >> x) vectors[w].push_back(x);
  }

  std::uniform_int_distribution<std::size_t> pick(0, words.size() - 1);
  for (int i = 0; i < 100; ++i) {
    const auto& q = words[pick(rng)];
    const std::size_t k = i % 2 == 0 ? 10 : 999;
    const double min_cos = i % 4 == 1 ? 0.1 : -1.0;
    std::vector<std::pair<double, std::size_t>> scan;
    for (std::size_t j = 0; j < words.size(); ++j) {
      if (words[j] == q) continue;
      const double cos = oracle::cosine(vectors[q], vectors[words[j]]);
      if (cos > min_cos) scan.emplace_back(cos, j);
    }
    std::sort(scan.begin(), scan.end(), [](const auto& a, const auto& b) {
      return a.first != b.first ? a.first > b.first : a.second < b.second;
    });
    if (scan.size() > k) scan.resize(k);
    const auto got = store.nearest_neighbors(q, k, min_cos);
    c.expect(got.has_value() && got->size() == scan.size(), "neighbor count for " + q);
    if (!got) continue;
    for (std::size_t r = 0; r < std::min(got->size(), scan.size()); ++r) {
      c.expect((*got)[r].word == words[scan[r].second],
               fmt::format("{} rank {}: {} vs {}", q, r + 1, (*got)[r].word, words[scan[r].second]));
      c.near((*got)[r].cos, scan[r].first, 1e-12, q + " cosine");
    }
  }
  c.within(seconds_since(start), 5);
}

// 3. The "recent research about AI" expansion and its boolean execution.
void recent_research_example(Check& c) {
  const auto store = EmbeddingStore::from_rows({"recent", "latest", "research", "about", "ai", "news"},
                                               {{1, 0, 0, 0},
                                                {0.8f, 0.6f, 0, 0},
                                                {0, 0, 1, 0},
                                                {0, 0, 0, 1},
                                                {0, -1, 0, 0},
                                                {0.5f, 0, 0.5f, 0.70710678f}});
  c.near(store.cosine("recent", "latest").value, 0.8, 1e-6, "cos(recent, latest)");
  for (const auto* w : {"research", "about", "ai", "news"}) {
    c.expect(store.cosine("recent", w).value <= 0.5 + 1e-7, std::string("cos(recent, ") + w + ") <= 0.5");
  }
  const auto query = analyze("recent research about AI", {});
  ExpansionConfig config;
  config.t = 0.75;
  config.neighbors_per_term = 1;
  const auto bq = expand_query(query, store, config);
  c.expect(bq.clauses() == std::vector<Terms>{{"recent", "research", "about", "ai"}, {"latest", "research", "about", "ai"}},
           "clauses are \"recent research about ai\" OR \"latest research about ai\"");

  const std::vector<RawDocument> docs = {
      testing::doc("n1", "recent research on ai systems"), testing::doc("n2", "the latest results in research"),
      testing::doc("n3", "latest news about ai"),          testing::doc("n4", "gardening tips"),
      testing::doc("n5", "recent events"),                 testing::doc("n6", "ai ai ai research about ai")};
  const auto ix = build_index(docs, {});
  const auto odocs = oracle_docs(docs);
  const Terms union_terms = {"recent", "research", "about", "ai", "latest"};
  compare_ranking(c, execute_boolean(bq, ix, {}, 100), oracle::bm25(odocs, union_terms, 0.9, 0.4), 1e-12,
                  "bm25 union");
  ScorerParams ql;
  ql.scorer = Scorer::ql;
  compare_ranking(c, execute_boolean(bq, ix, ql, 100), oracle::ql(odocs, union_terms, 1000.0), 1e-12, "ql union");
}

// 4. Clause count over every |E(q)| configuration.
void combination_counting(Check& c) {
  for (std::size_t len = 1; len <= 4; ++len) {
    std::size_t configs = 1;
    for (std::size_t i = 0; i < len; ++i) configs *= 3;
    for (std::size_t code = 0; code < configs; ++code) {
      // Query word i sits on its own axis; each neighbor leans towards it
      // (cos 0.9 and 0.85) and one distractor stays at cos 0.5.
      std::vector<std::string> words;
      std::vector<std::vector<float>> rows;
      const std::size_t dim = 4 * len;
      auto axis_row = [&](std::size_t i, float main, std::size_t side, float other) {
        std::vector<float> r(dim, 0.0f);
        r[4 * i] = main;
        r[4 * i + side] = other;
        return r;
      };
      Terms query;
      std::vector<std::size_t> sizes;
      std::size_t product = 1;
      for (std::size_t i = 0, rest = code; i < len; ++i, rest /= 3) {
        const std::size_t e = rest % 3;
        sizes.push_back(e);
        product *= 1 + e;
        query.push_back(fmt::format("q{}", i));
        words.push_back(query.back());
        rows.push_back(axis_row(i, 1.0f, 1, 0.0f));
        if (e >= 1) words.push_back(fmt::format("q{}a", i)), rows.push_back(axis_row(i, 0.9f, 1, 0.43588989f));
        if (e >= 2) words.push_back(fmt::format("q{}b", i)), rows.push_back(axis_row(i, 0.85f, 2, 0.52678269f));
        words.push_back(fmt::format("q{}z", i));
        rows.push_back(axis_row(i, 0.5f, 3, 0.8660254f));
      }
      const auto store = EmbeddingStore::from_rows(words, rows);
      for (const std::size_t cap : {std::size_t{1}, std::size_t{2}, std::size_t{5}, std::size_t{64}}) {
        ExpansionConfig config;
        config.neighbors_per_term = 2;
        config.max_alternatives = cap;
        const auto bq = expand_query(query, store, config);
        const std::size_t want = std::min(product, 1 + cap);
        c.expect(bq.size() == want, fmt::format("len {} E={} cap {}: {} clauses, want {}", len, fmt::join(sizes, ","), cap,
                                                bq.size(), want));
        c.expect(bq.original() == query, "first clause is the query");
        const auto candidates = expansion_candidates(query, store, config);
        for (std::size_t i = 0; i < len; ++i) {
          c.expect(candidates[i].size() == sizes[i], fmt::format("|E(q{})| = {}", i, sizes[i]));
        }
      }
    }
  }
}

// 5. NDCG / MAP against a brute-force metric loop and hand-derived values.
void metric_oracle(Check& c) {
  std::mt19937_64 rng(5005);
  for (int fixture = 0; fixture < 50; ++fixture) {
    std::uniform_int_distribution<int> topics_n(1, 5), docs_n(1, 20), grade(-1, 3), coin(0, 2);
    Qrels qrels;
    RunFile run;
    run.tag = "fx";
    std::map<std::string, std::map<std::string, int>> judged;
    for (int t = 0, nt = topics_n(rng); t < nt; ++t) {
      const auto topic = std::to_string(t + 1);
      std::vector<std::string> ids;
      for (int d = 0; d < 20; ++d) ids.push_back("d" + std::to_string(d));
      std::shuffle(ids.begin(), ids.end(), rng);
      Ranking ranking;
      const int nd = docs_n(rng);
      for (int i = 0; i < nd; ++i) ranking.push_back({ids[i], 1.0 / (i + 1)});
      run.add_topic(topic, ranking);
      for (const auto& id : ids) {
        if (coin(rng) == 0) continue;
        const int g = grade(rng);
        judged[topic][id] = g;
        qrels.judgments[topic][id] = std::max(g, 0);
      }
    }
    const std::size_t depth = fixture % 3 == 0 ? 5 : 1000;
    const auto map = eval_map(run, qrels, depth);
    const auto ndcg = eval_ndcg(run, qrels, depth);
    std::map<std::string, double> ap_want, ndcg_want;
    for (const auto& t : run.topics) {
      Terms ranked;
      for (const auto& e : t.entries) ranked.push_back(e.doc_id);
      if (const double ap = oracle::average_precision(ranked, judged[t.topic_id], depth); ap >= 0) ap_want[t.topic_id] = ap;
      if (const double n = oracle::ndcg(ranked, judged[t.topic_id], depth); n >= 0) ndcg_want[t.topic_id] = n;
    }
    c.expect(map.per_topic.size() == ap_want.size(), "AP topic count");
    c.expect(ndcg.per_topic.size() == ndcg_want.size(), "NDCG topic count");
    for (const auto& s : map.per_topic) c.near(s.value, ap_want[s.topic_id], 1e-9, "AP topic " + s.topic_id);
    for (const auto& s : ndcg.per_topic) c.near(s.value, ndcg_want[s.topic_id], 1e-9, "NDCG topic " + s.topic_id);
  }

  std::istringstream qin("1 0 a 1\n1 0 c 1\n1 0 x 0\n");
  const auto hand_qrels = read_qrels(qin);
  std::istringstream rin("1 Q0 a 1 3.0 h\n1 Q0 b 2 2.0 h\n1 Q0 c 3 1.0 h\n");
  const auto hand_run = read_run(rin);
  c.near(eval_map(hand_run, hand_qrels).mean, 0.8333, 1e-4, "hand AP");
  c.near(eval_ndcg(hand_run, hand_qrels).mean, 0.9197, 1e-4, "hand NDCG");

  // Negative judgments: trec_eval counts them as non-relevant with no gain.
  // Expected values for this fixture: relevant doc b at rank 2 of 2.
  std::istringstream neg_in("7 0 a -1\n7 0 b 2\n7 0 c -3\n");
  const auto neg_qrels = read_qrels(neg_in);
  std::istringstream neg_run_in("7 Q0 a 1 2.0 n\n7 Q0 b 2 1.0 n\n7 Q0 c 3 0.5 n\n");
  const auto neg_run = read_run(neg_run_in);
  c.expect(neg_qrels.clamped == 2, "two negative grades clamped");
  c.near(eval_map(neg_run, neg_qrels).mean, 0.5, 1e-12, "MAP with negative grades");
  c.near(eval_ndcg(neg_run, neg_qrels).mean, 1.0 / std::log2(3.0), 1e-12, "NDCG with negative grades");
}

// Store whose rows are scaled copies of one random matrix.
EmbeddingStore scaled_store(std::size_t vocab, std::size_t dim, float scale, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<float> g(0.0f, 1.0f);
  std::vector<std::vector<float>> rows(vocab, std::vector<float>(dim));
  for (auto& r : rows) {
    for (auto& x : r) x = g(rng) * scale;
  }
  return EmbeddingStore::from_rows(testing::vocabulary(vocab), rows);
}

Terms ids_of(const Ranking& r) {
  Terms out;
  for (const auto& s : r) out.push_back(s.doc_id);
  return out;
}

// 6. AWE invariances and oracle equality.
void awe_invariances(Check& c) {
  std::mt19937_64 rng(6006);
  const auto docs = testing::random_corpus(rng, 50, 40, 15);
  const auto ix = build_index(docs, {});
  const auto base = scaled_store(35, 12, 1.0f, 61);
  const auto scaled = scaled_store(35, 12, 3.7f, 61);
  std::vector<Terms> queries;
  for (int i = 0; i < 25; ++i) queries.push_back(testing::random_query(rng, 40, 4));

  // (a) scale invariance and (c) rerank_depth 0 vs corpus size
  for (const auto w : {Weighting::mean, Weighting::tfidf_weighted, Weighting::tfidf_divided}) {
    AweConfig all;
    all.weighting = w;
    all.rerank_depth = 0;
    AweConfig full = all;
    full.rerank_depth = docs.size();
    for (const auto& q : queries) {
      const auto a = score_awe(q, ix, base, all, 1000).ranking;
      c.expect(ids_of(a) == ids_of(score_awe(q, ix, scaled, all, 1000).ranking),
               fmt::format("scaling changed the {} ranking", to_string(w)));
      c.expect(a == score_awe(q, ix, base, full, 1000).ranking,
               fmt::format("rerank_depth 0 vs {} differ ({})", docs.size(), to_string(w)));
    }
  }

  // (b) every word has df 5 and every text has tf 1, so g(w) is uniform.
  std::vector<RawDocument> uniform;
  for (int i = 0; i < 40; ++i) {
    std::string body;
    for (int j = 0; j < 5; ++j) body += fmt::format("w{} ", (i + 7 * j) % 40);
    uniform.push_back(testing::doc(fmt::format("u{:02d}", i), body));
  }
  const auto uix = build_index(uniform, {});
  const auto ustore = scaled_store(40, 12, 1.0f, 62);
  for (int i = 0; i < 25; ++i) {
    Terms q;
    for (int j = 0; j < 3; ++j) q.push_back(fmt::format("w{}", (i * 3 + j * 11) % 40));
    AweConfig mean{Weighting::mean, 0, {}};
    AweConfig weighted{Weighting::tfidf_weighted, 0, {}};
    c.expect(ids_of(score_awe(q, uix, ustore, mean, 1000).ranking) ==
                 ids_of(score_awe(q, uix, ustore, weighted, 1000).ranking),
             "uniform g(w): tfidf_weighted ranking differs from mean");
  }

  // (d) 10-doc corpus with crafted d=5 vectors against a brute-force cosine loop.
  std::map<std::string, std::vector<double>> vectors = {
      {"apple", {1, 0, 0, 0.5, 0}},   {"banana", {0.75, 0.25, 0, 0, 0.25}}, {"car", {0, 1, 0.5, 0, 0}},
      {"truck", {0, 0.75, 0.5, 0, 0}}, {"sky", {0, 0, 0, 1, 1}},            {"blue", {0.25, 0, 0, 0.75, 1}},
      {"fruit", {1, 0, 0.125, 0.25, 0}}};
  Terms words;
  std::vector<std::vector<float>> rows;
  for (const auto& [w, v] : vectors) {
    words.push_back(w);
    rows.emplace_back(v.begin(), v.end());
  }
  const auto store = EmbeddingStore::from_rows(words, rows);
  const std::vector<RawDocument> ten = {
      testing::doc("d01", "apple banana fruit"), testing::doc("d02", "car truck car"),
      testing::doc("d03", "blue sky"),           testing::doc("d04", "apple apple car"),
      testing::doc("d05", "fruit sky blue"),     testing::doc("d06", "truck"),
      testing::doc("d07", "nothing known"),      testing::doc("d08", "banana blue truck"),
      testing::doc("d09", "fruit fruit banana"), testing::doc("d10", "sky car apple")};
  const auto tix = build_index(ten, {});
  std::vector<Terms> corpus;
  for (const auto& d : ten) corpus.push_back(analyze(d.body, {}));
  auto text_vec = [&](const Terms& text) -> std::optional<std::vector<double>> {
    std::map<std::string, double> tf;
    for (const auto& t : text) tf[t] += 1;
    std::vector<std::vector<double>> vs;
    std::vector<double> gs;
    for (const auto& [w, n] : tf) {
      double df = 0;
      for (const auto& d : corpus) df += std::count(d.begin(), d.end(), w) > 0 ? 1 : 0;
      if (!vectors.contains(w) || df == 0) continue;
      vs.push_back(vectors[w]);
      gs.push_back(n * (std::log((corpus.size() + 1.0) / (df + 1.0)) + 1.0));
    }
    if (vs.empty()) return std::nullopt;
    return oracle::weighted_average(vs, gs);
  };
  for (const Terms& q : {Terms{"fruit", "apple"}, Terms{"car"}, Terms{"blue", "sky", "sky", "banana"}, Terms{"truck", "apple"}}) {
    const auto qv = *text_vec(q);
    std::vector<oracle::Scored> want;
    for (std::size_t i = 0; i < ten.size(); ++i) {
      const auto dv = text_vec(corpus[i]);
      want.push_back({ten[i].doc_id, dv ? oracle::cosine(qv, *dv) : -2.0});
    }
    oracle::sort_scored(want);
    AweConfig config;
    config.rerank_depth = 0;
    const auto got = score_awe(q, tix, store, config, 100).ranking;
    c.expect(got.size() == want.size(), "10-doc ranking size");
    for (std::size_t i = 0; i < std::min(got.size(), want.size()); ++i) {
      c.expect(got[i].doc_id == want[i].id, fmt::format("10-doc rank {}: {} vs {}", i + 1, got[i].doc_id, want[i].id));
      c.near(got[i].score, want[i].score, 1e-12, "10-doc score " + got[i].doc_id);
    }
  }
}

// 7. Affect means: exactness, oracle agreement, order and duplication.
void affect_scoring(Check& c) {
  // Constant lexicon: every scored token carries 0.37 after normalization.
  const auto constant = AffectLexicon::from_raw({"v"}, {{"lo", {0.0}}, {"s", {0.37}}, {"hi", {1.0}}});
  const double s = constant.scores("s")->front();
  std::vector<RawDocument> docs;
  for (int i = 0; i < 9; ++i) docs.push_back(testing::doc(fmt::format("c{}", i), std::string(i % 4 + 1, 'x') + " s s s"));
  c.expect(score_corpus(docs, constant).means[0] == s, "constant lexicon mean is exact");
  c.expect(score_corpus(docs, constant, {}, AffectAggregate::tokens).means[0] == s, "constant lexicon token mean is exact");

  const auto two = AffectLexicon::from_raw({"v"}, {{"zero", {0.0}}, {"a", {0.2}}, {"b", {0.8}}, {"one", {1.0}}});
  const std::vector<RawDocument> pair = {testing::doc("p1", "a"), testing::doc("p2", "b")};
  const auto pair_mean = score_corpus(pair, two).means[0];
  c.expect(pair_mean.has_value(), "two-doc mean defined");
  c.near(pair_mean.value_or(-1), 0.5, 1e-12, "two-doc mean");

  // 5 docs, 10-word lexicon, token loop over normalized doubles.
  std::vector<std::pair<std::string, std::vector<double>>> raw;
  std::map<std::string, std::vector<double>> norm;
  const std::vector<double> f = {3, 7, 1, 9, 4, 6, 2, 8, 5, 5.5};
  const std::vector<double> p = {0.1, 0.9, 0.5, 0.3, 0.7, 0.2, 0.8, 0.4, 0.6, 0.05};
  for (int i = 0; i < 10; ++i) {
    raw.push_back({fmt::format("w{}", i), {f[i], p[i]}});
    norm[fmt::format("w{}", i)] = {(f[i] - 1) / 8, (p[i] - 0.05) / 0.85};
  }
  const auto lex = AffectLexicon::from_raw({"formality", "politeness"}, raw);
  const std::vector<RawDocument> five = {testing::doc("f1", "w0 w1 w1 filler"), testing::doc("f2", "w2 w3 w4 w5 w6"),
                                         testing::doc("f3", "none of these"), testing::doc("f4", "W7 w8 w9 w9 w9 x y"),
                                         testing::doc("f5", "w0")};
  std::vector<double> doc_mean(2, 0.0);
  double scored = 0, matched = 0, total = 0;
  for (const auto& d : five) {
    std::vector<double> sum(2, 0.0);
    double n = 0;
    for (const auto& t : analyze(d.body, {})) {
      total += 1;
      if (!norm.contains(t)) continue;
      n += 1;
      for (int k = 0; k < 2; ++k) sum[k] += norm[t][k];
    }
    if (n == 0) continue;
    scored += 1;
    matched += n;
    for (int k = 0; k < 2; ++k) doc_mean[k] += sum[k] / n;
  }
  const auto report = score_corpus(five, lex);
  c.expect(report.docs_scored == 4 && report.docs_skipped == 1, "5-doc scored/skipped counts");
  for (int k = 0; k < 2; ++k) {
    c.near(report.means[k].value_or(-1), doc_mean[k] / scored, 1e-9, "5-doc mean " + lex.dimensions()[k]);
    c.near(report.coverage[k], matched / total, 1e-12, "5-doc coverage");
  }

  std::mt19937_64 rng(7007);
  std::uniform_real_distribution<double> u(-2.0, 5.0);
  std::vector<std::pair<std::string, std::vector<double>>> big_raw;
  for (int i = 0; i < 40; ++i) big_raw.push_back({fmt::format("w{}", i), {u(rng), u(rng), u(rng)}});
  const auto big = AffectLexicon::from_raw({"formality", "politeness", "frustration"}, big_raw);
  auto corpus = testing::random_corpus(rng, 300, 80, 25);
  const auto baseline = score_corpus(corpus, big).to_json();
  for (int i = 0; i < 5; ++i) {
    std::shuffle(corpus.begin(), corpus.end(), rng);
    c.expect(score_corpus(corpus, big, {}, AffectAggregate::documents, 1 + i % 3).to_json() == baseline,
             "permutation changed the report");
  }
  auto doubled = corpus;
  for (auto d : corpus) {
    d.doc_id += "+";
    doubled.push_back(std::move(d));
  }
  c.expect(score_corpus(doubled, big).to_json()["dimensions"] == baseline["dimensions"],
           "duplication changed the means");
}

std::map<std::string, std::string> snapshot(const fs::path& dir) {
  std::map<std::string, std::string> files;
  for (const auto& e : fs::recursive_directory_iterator(dir)) {
    if (e.is_regular_file()) files[fs::relative(e.path(), dir).string()] = testing::read_file(e.path());
  }
  return files;
}

int embir_cli(const std::vector<std::string>& args, std::string* out = nullptr) {
  std::ostringstream o, e;
  const int code = cli::run(args, o, e);
  if (out != nullptr) *out = o.str();
  if (code != 0) std::cerr << "embir " << fmt::format("{}", fmt::join(args, " ")) << ": " << e.str();
  return code;
}

// 8. Whole pipeline is byte-identical across executions and job counts.
void end_to_end_determinism(Check& c) {
  const auto start = std::chrono::steady_clock::now();
  testing::TempDir dir;
  const auto fx = testing::make_fixture(dir.path(), 1000, 25);
  const fs::path out = dir / "out";

  auto execute = [&](const std::string& jobs) {
    fs::remove_all(out);
    fs::create_directories(out);
    const auto index = (out / "index.bin").string();
    c.expect(embir_cli({"index", "--format", "jsonl", "--input", fx.corpus.string(), "--output", index}) == 0, "index");
    testing::write_file(out / "batch.ini", fmt::format(R"([defaults]
index = {}
topics = {}
qrels = {}
embeddings = {}
output_dir = runs
depth = 200

[bm25]
pipeline = bm25

[ql]
pipeline = ql

[expand]
pipeline = expand
t = 0.8
k_neighbors = 2

[awe]
pipeline = awe
weighting = tfidf_weighted
rerank_depth = 200
awe_cache = runs/awe.vectors
)",
                                                       index, fx.topics.string(), fx.qrels.string(),
                                                       fx.embeddings.string()));
    c.expect(embir_cli({"batch", (out / "batch.ini").string(), "--jobs", jobs, "--output", (out / "table.tsv").string()}) == 0,
             "batch --jobs " + jobs);
    for (const auto* tag : {"bm25", "ql", "expand", "awe"}) {
      const auto run = (out / "runs" / (std::string(tag) + ".run")).string();
      c.expect(embir_cli({"eval", "--run", run, "--qrels", fx.qrels.string(), "--per-topic", "--output",
                          (out / (std::string(tag) + ".eval")).string()}) == 0,
               std::string("eval ") + tag);
    }
    return snapshot(out);
  };

  const auto first = execute("1");
  const auto second = execute("1");
  const auto parallel = execute("4");
  c.expect(first.size() >= 13, fmt::format("expected outputs, found {} files", first.size()));
  c.expect(first == second, "two executions differ");
  c.expect(first == parallel, "--jobs 1 and --jobs 4 differ");
  for (const auto& [name, bytes] : first) {
    if (!second.contains(name) || second.at(name) != bytes) c.expect(false, "differs across executions: " + name);
    if (!parallel.contains(name) || parallel.at(name) != bytes) c.expect(false, "differs across job counts: " + name);
  }
  const auto table = first.contains("table.tsv") ? first.at("table.tsv") : "";
  c.expect(std::count(table.begin(), table.end(), '\n') == 5, "batch table has a header and 4 rows");
  c.within(seconds_since(start), 60);
}

// 9. CACM BM25 baseline, when the collection is available.
void cacm_baseline(Check& c) {
  fs::path root;
  if (const char* env = std::getenv("EMBIR_CACM_DIR")) {
    root = env;
  } else {
    root = fs::path(EMBIR_SOURCE_DIR) / "data" / "cacm";
  }
  for (const auto* f : {"cacm.all", "query.text", "qrels.text"}) {
    if (!fs::exists(root / f)) throw Skip{fmt::format("CACM not found ({} missing; set EMBIR_CACM_DIR)", (root / f).string())};
  }
  const auto start = std::chrono::steady_clock::now();
  testing::TempDir dir;
  // qrels.text lines are "query doc 0 0" with zero-padded query ids; every
  // listed pair is relevant.
  {
    std::ifstream in(root / "qrels.text");
    std::ofstream qrels(dir / "qrels.txt");
    std::string topic, doc, a, b;
    while (in >> topic >> doc >> a >> b) qrels << std::stoi(topic) << " 0 " << doc << " 1\n";
  }
  c.expect(embir_cli({"index", "--format", "cacm", "--input", (root / "cacm.all").string(), "--output",
                      (dir / "cacm.idx").string()}) == 0,
           "index CACM");
  c.expect(embir_cli({"search", "--index", (dir / "cacm.idx").string(), "--topics", (root / "query.text").string(),
                      "--topic-format", "cacm", "--output", (dir / "bm25.run").string(), "--tag", "bm25"}) == 0,
           "BM25 run");
  std::string metrics;
  c.expect(embir_cli({"eval", "--run", (dir / "bm25.run").string(), "--qrels", (dir / "qrels.txt").string(),
                      "--metrics", "ndcg,map"},
                     &metrics) == 0,
           "eval");
  std::istringstream rows(metrics);
  std::string metric, topic;
  double value = 0;
  std::map<std::string, double> all;
  while (rows >> metric >> topic >> value) {
    if (topic == "all") all[metric] = value;
  }
  c.near(all["ndcg"], 0.3805, 0.05, "CACM BM25 NDCG");
  c.near(all["map"], 0.1947, 0.05, "CACM BM25 MAP");
  std::cout << fmt::format("  CACM BM25: NDCG {:.4f}, MAP {:.4f}\n", all["ndcg"], all["map"]);
  c.within(seconds_since(start), 120);
}

}  // namespace

int main() {
  cli::configure_logging();
  const std::vector<std::pair<std::string, std::function<void(Check&)>>> criteria = {
      {"lexical scorers equal brute-force BM25/QL", lexical_oracle},
      {"k-NN equals exhaustive scan", knn_exact},
      {"\"recent research about AI\" expansion and union execution", recent_research_example},
      {"clause count over all |E(q)| configurations", combination_counting},
      {"NDCG/MAP equal brute-force metrics", metric_oracle},
      {"AWE invariances and oracle ranking", awe_invariances},
      {"affect means: exact, oracle-equal, order/duplication invariant", affect_scoring},
      {"end-to-end pipeline is byte-identical (runs, --jobs 1 vs 4)", end_to_end_determinism},
      {"CACM BM25 baseline NDCG/MAP", cacm_baseline},
  };
  int failures = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const auto& [name, fn] = criteria[i];
    Check check;
    const auto start = std::chrono::steady_clock::now();
    std::string status = "PASS";
    std::string detail;
    try {
      fn(check);
      if (check.failed()) status = "FAIL";
    } catch (const Skip& s) {
      status = "SKIP";
      detail = s.reason;
    } catch (const std::exception& e) {
      status = "FAIL";
      detail = std::string("exception: ") + e.what();
    }
    std::cout << fmt::format("{} criterion {}: {} ({:.2f} s){}\n", status, i + 1, name, seconds_since(start),
                             detail.empty() ? "" : " - " + detail);
    for (const auto& p : check.problems()) std::cout << "  " << p << "\n";
    failures += status == "FAIL" ? 1 : 0;
  }
  return failures == 0 ? 0 : 1;
}
