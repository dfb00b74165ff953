#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace embir {

enum class Stemmer { none, porter };

std::string_view to_string(Stemmer s);
Stemmer parse_stemmer(std::string_view name);

/// Tokenizer/normalizer settings. Tokens are maximal runs of Unicode
/// letters and digits; everything else separates tokens.
struct AnalyzerConfig {
  bool lowercase = true;
  /// Sorted and deduplicated by normalized().
  std::vector<std::string> stopwords;
  Stemmer stemmer = Stemmer::none;

  /// Canonical form: stopwords sorted, duplicates removed.
  AnalyzerConfig normalized() const;
  /// Stable text form, e.g. "lowercase=1;stemmer=none;stopwords=a,the".
  std::string canonical() const;
  /// Short hash of canonical(). Stored in indexes.
  std::string fingerprint() const;

  bool operator==(const AnalyzerConfig&) const = default;
};

/// Reads a stopword file: one word per line, '#' starts a comment.
std::vector<std::string> load_stopwords(const std::filesystem::path& path);

/// Stateless apart from its config; safe to share across threads.
class Analyzer {
 public:
  Analyzer() : Analyzer(AnalyzerConfig{}) {}
  explicit Analyzer(AnalyzerConfig config);

  const AnalyzerConfig& config() const { return config_; }
  const std::string& fingerprint() const { return fingerprint_; }

  std::vector<std::string> analyze(std::string_view text) const;

  /// Calls sink(term) for each term in order, without building a vector.
  template <typename Sink>
  void for_each_term(std::string_view text, Sink&& sink) const;

 private:
  bool normalize_token(std::string& token) const;

  AnalyzerConfig config_;
  std::string fingerprint_;
};

std::vector<std::string> analyze(std::string_view text, const AnalyzerConfig& config);

namespace detail {
/// Splits UTF-8 text into raw tokens (optionally lowercased).
void tokenize(std::string_view text, bool lowercase, std::vector<std::string>& out);
}  // namespace detail

template <typename Sink>
void Analyzer::for_each_term(std::string_view text, Sink&& sink) const {
  std::vector<std::string> tokens;
  detail::tokenize(text, config_.lowercase, tokens);
  for (auto& tok : tokens) {
    if (normalize_token(tok)) sink(tok);
  }
}

}  // namespace embir
