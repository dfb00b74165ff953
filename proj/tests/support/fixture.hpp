#pragma once

// Synthetic on-disk experiment fixture: corpus, topics, qrels, embeddings and
// an affect lexicon, all derived from one seed.

#include <filesystem>
#include <fstream>
#include <random>
#include <set>
#include <string>
#include <vector>

#include <fmt/format.h>

#include "embir/analysis.hpp"
#include "embir/corpus.hpp"
#include "test_support.hpp"

namespace embir::testing {

struct Fixture {
  std::filesystem::path corpus;
  std::filesystem::path topics;
  std::filesystem::path qrels;
  std::filesystem::path embeddings;
  std::filesystem::path lexicon;
  std::vector<RawDocument> docs;
};

/// Embeddings where words sharing i % clusters point roughly the same way,
/// so expansion finds neighbors above typical thresholds.
inline void write_clustered_glove(const std::filesystem::path& path, std::size_t vocab, std::size_t dim,
                                  std::size_t clusters, std::mt19937_64& rng) {
  std::normal_distribution<double> g(0.0, 1.0);
  std::vector<std::vector<double>> centers(clusters, std::vector<double>(dim));
  for (auto& c : centers) {
    for (auto& x : c) x = g(rng);
  }
  std::ofstream out(path);
  for (std::size_t w = 0; w < vocab; ++w) {
    out << 'w' << w;
    for (std::size_t i = 0; i < dim; ++i) out << fmt::format(" {:.6f}", centers[w % clusters][i] + 0.35 * g(rng));
    out << '\n';
  }
}

inline Fixture make_fixture(const std::filesystem::path& dir, std::size_t num_docs, std::size_t num_topics,
                            std::uint64_t seed = 42) {
  std::mt19937_64 rng(seed);
  const std::size_t vocab = 300;
  Fixture f;
  f.corpus = dir / "corpus.jsonl";
  f.topics = dir / "topics.tsv";
  f.qrels = dir / "qrels.txt";
  f.embeddings = dir / "vectors.txt";
  f.lexicon = dir / "lexicon.tsv";

  f.docs = random_corpus(rng, num_docs, vocab, 40);
  {
    std::ofstream out(f.corpus);
    write_jsonl(f.docs, out);
  }

  std::uniform_int_distribution<std::size_t> word(0, vocab + 20);
  std::uniform_int_distribution<int> grade(0, 2);
  std::ofstream topics(f.topics);
  std::ofstream qrels(f.qrels);
  for (std::size_t t = 0; t < num_topics; ++t) {
    const std::string id = std::to_string(401 + t);
    std::vector<std::string> terms;
    for (int i = 0; i < 3; ++i) terms.push_back("w" + std::to_string(word(rng)));
    topics << id << '\t' << terms[0] << ' ' << terms[1] << ' ' << terms[2] << '\n';
    // Judged: documents containing the first term, graded at random.
    for (const auto& d : f.docs) {
      const auto words = analyze(d.body, {});
      if (std::find(words.begin(), words.end(), terms[0]) == words.end()) continue;
      qrels << id << " 0 " << d.doc_id << ' ' << grade(rng) << '\n';
    }
  }

  write_clustered_glove(f.embeddings, vocab, 16, 25, rng);

  std::ofstream lex(f.lexicon);
  std::uniform_real_distribution<double> u(0.0, 9.0);
  lex << "word\tformality\tpoliteness\tfrustration\n";
  for (std::size_t w = 0; w < vocab; w += 3) lex << fmt::format("w{}\t{:.3f}\t{:.3f}\t{:.3f}\n", w, u(rng), u(rng), u(rng));
  return f;
}

}  // namespace embir::testing
