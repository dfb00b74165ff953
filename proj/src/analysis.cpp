#include "embir/analysis.hpp"

#include <algorithm>
#include <clocale>
#include <cwctype>
#include <fstream>
#include <locale.h>

#include "embir/errors.hpp"
#include "embir/hashing.hpp"
#include "embir/porter_stemmer.hpp"

namespace embir {

std::string_view to_string(Stemmer s) { return s == Stemmer::porter ? "porter" : "none"; }

Stemmer parse_stemmer(std::string_view name) {
  if (name == "none") return Stemmer::none;
  if (name == "porter") return Stemmer::porter;
  throw ConfigError("unknown stemmer '" + std::string(name) + "' (expected none|porter)");
}

AnalyzerConfig AnalyzerConfig::normalized() const {
  AnalyzerConfig out = *this;
  std::sort(out.stopwords.begin(), out.stopwords.end());
  out.stopwords.erase(std::unique(out.stopwords.begin(), out.stopwords.end()), out.stopwords.end());
  return out;
}

std::string AnalyzerConfig::canonical() const {
  const AnalyzerConfig n = normalized();
  std::string out = "lowercase=";
  out += n.lowercase ? "1" : "0";
  out += ";stemmer=";
  out += to_string(n.stemmer);
  out += ";stopwords=";
  for (std::size_t i = 0; i < n.stopwords.size(); ++i) {
    if (i > 0) out += ',';
    out += n.stopwords[i];
  }
  return out;
}

std::string AnalyzerConfig::fingerprint() const { return short_hash(canonical()); }

std::vector<std::string> load_stopwords(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open stopword file " + path.string());
  std::vector<std::string> words;
  std::string line;
  while (std::getline(in, line)) {
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    const auto first = line.find_first_not_of(" \t\r\n");
    if (first == std::string::npos) continue;
    const auto last = line.find_last_not_of(" \t\r\n");
    words.push_back(line.substr(first, last - first + 1));
  }
  return words;
}

namespace detail {

namespace {

locale_t utf8_locale() {
  static const locale_t loc = [] {
    locale_t l = newlocale(LC_CTYPE_MASK, "C.UTF-8", static_cast<locale_t>(0));
    if (l == static_cast<locale_t>(0)) l = newlocale(LC_CTYPE_MASK, "C.utf8", static_cast<locale_t>(0));
    return l;
  }();
  return loc;
}

constexpr char32_t kInvalid = 0xFFFFFFFF;

// Decodes one code point at text[i]; advances i. Invalid sequences consume a
// single byte and yield kInvalid.
char32_t decode(std::string_view text, std::size_t& i) {
  const auto b0 = static_cast<unsigned char>(text[i]);
  if (b0 < 0x80) {
    ++i;
    return b0;
  }
  int len = 0;
  char32_t cp = 0;
  if ((b0 & 0xE0) == 0xC0) {
    len = 2;
    cp = b0 & 0x1F;
  } else if ((b0 & 0xF0) == 0xE0) {
    len = 3;
    cp = b0 & 0x0F;
  } else if ((b0 & 0xF8) == 0xF0) {
    len = 4;
    cp = b0 & 0x07;
  } else {
    ++i;
    return kInvalid;
  }
  if (i + len > text.size()) {
    ++i;
    return kInvalid;
  }
  for (int k = 1; k < len; ++k) {
    const auto bk = static_cast<unsigned char>(text[i + k]);
    if ((bk & 0xC0) != 0x80) {
      ++i;
      return kInvalid;
    }
    cp = (cp << 6) | (bk & 0x3F);
  }
  const bool overlong = (len == 2 && cp < 0x80) || (len == 3 && cp < 0x800) || (len == 4 && cp < 0x10000);
  if (overlong || cp > 0x10FFFF || (cp >= 0xD800 && cp <= 0xDFFF)) {
    ++i;
    return kInvalid;
  }
  i += len;
  return cp;
}

void encode(char32_t cp, std::string& out) {
  if (cp < 0x80) {
    out += static_cast<char>(cp);
  } else if (cp < 0x800) {
    out += static_cast<char>(0xC0 | (cp >> 6));
    out += static_cast<char>(0x80 | (cp & 0x3F));
  } else if (cp < 0x10000) {
    out += static_cast<char>(0xE0 | (cp >> 12));
    out += static_cast<char>(0x80 | ((cp >> 6) & 0x3F));
    out += static_cast<char>(0x80 | (cp & 0x3F));
  } else {
    out += static_cast<char>(0xF0 | (cp >> 18));
    out += static_cast<char>(0x80 | ((cp >> 12) & 0x3F));
    out += static_cast<char>(0x80 | ((cp >> 6) & 0x3F));
    out += static_cast<char>(0x80 | (cp & 0x3F));
  }
}

bool is_token_char(char32_t cp) {
  if (cp < 0x80) {
    return (cp >= 'a' && cp <= 'z') || (cp >= 'A' && cp <= 'Z') || (cp >= '0' && cp <= '9');
  }
  if (cp == kInvalid) return false;
  const locale_t loc = utf8_locale();
  return loc != static_cast<locale_t>(0) && iswalnum_l(static_cast<wint_t>(cp), loc) != 0;
}

char32_t to_lower(char32_t cp) {
  if (cp < 0x80) return (cp >= 'A' && cp <= 'Z') ? cp + ('a' - 'A') : cp;
  const locale_t loc = utf8_locale();
  if (loc == static_cast<locale_t>(0)) return cp;
  const auto lowered = static_cast<char32_t>(towlower_l(static_cast<wint_t>(cp), loc));
  // Keep lowering from turning a token character into a separator.
  return is_token_char(lowered) ? lowered : cp;
}

}  // namespace

void tokenize(std::string_view text, bool lowercase, std::vector<std::string>& out) {
  std::string current;
  std::size_t i = 0;
  while (i < text.size()) {
    const std::size_t start = i;
    const char32_t cp = decode(text, i);
    if (is_token_char(cp)) {
      if (lowercase) {
        encode(to_lower(cp), current);
      } else {
        current.append(text.substr(start, i - start));
      }
    } else if (!current.empty()) {
      out.push_back(std::move(current));
      current.clear();
    }
  }
  if (!current.empty()) out.push_back(std::move(current));
}

}  // namespace detail

Analyzer::Analyzer(AnalyzerConfig config)
    : config_(config.normalized()), fingerprint_(config_.fingerprint()) {}

bool Analyzer::normalize_token(std::string& token) const {
  if (!config_.stopwords.empty() &&
      std::binary_search(config_.stopwords.begin(), config_.stopwords.end(), token)) {
    return false;
  }
  if (config_.stemmer == Stemmer::porter) token = porter_stem(token);
  return !token.empty();
}

std::vector<std::string> Analyzer::analyze(std::string_view text) const {
  std::vector<std::string> out;
  for_each_term(text, [&out](std::string& term) { out.push_back(std::move(term)); });
  return out;
}

std::vector<std::string> analyze(std::string_view text, const AnalyzerConfig& config) {
  return Analyzer(config).analyze(text);
}

}  // namespace embir
