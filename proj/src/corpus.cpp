#include "embir/corpus.hpp"

#include <zlib.h>

#include <algorithm>
#include <cctype>
#include <fstream>
#include <memory>
#include <ostream>
#include <sstream>
#include <unordered_set>

#include <nlohmann/json.hpp>

#include "embir/errors.hpp"

namespace embir {

namespace fs = std::filesystem;

std::string_view to_string(SourceFormat f) {
  switch (f) {
    case SourceFormat::trec_sgml: return "trec";
    case SourceFormat::cacm: return "cacm";
    case SourceFormat::jsonl: return "jsonl";
    case SourceFormat::plain_dir: return "plain_dir";
  }
  return "?";
}

SourceFormat parse_source_format(std::string_view name) {
  if (name == "trec" || name == "trec_sgml") return SourceFormat::trec_sgml;
  if (name == "cacm") return SourceFormat::cacm;
  if (name == "jsonl") return SourceFormat::jsonl;
  if (name == "plain_dir" || name == "dir") return SourceFormat::plain_dir;
  throw ConfigError("unknown collection format '" + std::string(name) + "' (expected trec|cacm|jsonl|plain_dir)");
}

std::string_view to_string(TopicFormat f) {
  switch (f) {
    case TopicFormat::trec_topics: return "trec";
    case TopicFormat::tsv: return "tsv";
    case TopicFormat::cacm: return "cacm";
  }
  return "?";
}

TopicFormat parse_topic_format(std::string_view name) {
  if (name == "trec" || name == "trec_topics") return TopicFormat::trec_topics;
  if (name == "tsv") return TopicFormat::tsv;
  if (name == "cacm") return TopicFormat::cacm;
  throw ConfigError("unknown topic format '" + std::string(name) + "' (expected trec|tsv|cacm)");
}

TopicField parse_topic_field(std::string_view name) {
  if (name == "title") return TopicField::title;
  if (name == "title+desc" || name == "title_description") return TopicField::title_description;
  throw ConfigError("unknown topic field '" + std::string(name) + "' (expected title|title+desc)");
}

std::string query_text(const Topic& topic, TopicField field) {
  if (field == TopicField::title || topic.description.empty()) return topic.title;
  return topic.title + " " + topic.description;
}

std::string sanitize_utf8(std::string_view bytes, std::size_t& replacements) {
  static constexpr std::string_view kReplacement = "\xEF\xBF\xBD";
  std::string out;
  out.reserve(bytes.size());
  std::size_t i = 0;
  while (i < bytes.size()) {
    const auto b0 = static_cast<unsigned char>(bytes[i]);
    if (b0 < 0x80) {
      out += static_cast<char>(b0);
      ++i;
      continue;
    }
    std::size_t len = 0;
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
    }
    bool ok = len > 0 && i + len <= bytes.size();
    for (std::size_t k = 1; ok && k < len; ++k) {
      const auto bk = static_cast<unsigned char>(bytes[i + k]);
      ok = (bk & 0xC0) == 0x80;
      cp = (cp << 6) | (bk & 0x3F);
    }
    if (ok) {
      const bool overlong = (len == 2 && cp < 0x80) || (len == 3 && cp < 0x800) || (len == 4 && cp < 0x10000);
      ok = !overlong && cp <= 0x10FFFF && !(cp >= 0xD800 && cp <= 0xDFFF);
    }
    if (ok) {
      out.append(bytes.substr(i, len));
      i += len;
    } else {
      out += kReplacement;
      ++replacements;
      ++i;
    }
  }
  return out;
}

namespace {

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r\n\f\v");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n\f\v");
  return s.substr(first, last - first + 1);
}

std::string collapse_whitespace(std::string_view s) {
  std::string out;
  bool pending_space = false;
  for (const char c : s) {
    if (std::isspace(static_cast<unsigned char>(c))) {
      pending_space = !out.empty();
    } else {
      if (pending_space) out += ' ';
      pending_space = false;
      out += c;
    }
  }
  return out;
}

bool iequals(std::string_view a, std::string_view b) {
  return a.size() == b.size() && std::equal(a.begin(), a.end(), b.begin(), [](char x, char y) {
           return std::tolower(static_cast<unsigned char>(x)) == std::tolower(static_cast<unsigned char>(y));
         });
}

bool istarts_with(std::string_view s, std::string_view prefix) {
  return s.size() >= prefix.size() && iequals(s.substr(0, prefix.size()), prefix);
}

/// Line reader over a plain or gzip-compressed file, tracking byte offsets.
class TextSource {
 public:
  explicit TextSource(const fs::path& path) : path_(path.string()) {
    if (path.extension() == ".gz") {
      gz_ = gzopen(path_.c_str(), "rb");
      if (gz_ == nullptr) throw IngestError("cannot open " + path_);
    } else {
      file_ = std::make_unique<std::ifstream>(path, std::ios::binary);
      if (!*file_) throw IngestError("cannot open " + path_);
    }
  }
  ~TextSource() {
    if (gz_ != nullptr) gzclose(gz_);
  }
  TextSource(const TextSource&) = delete;
  TextSource& operator=(const TextSource&) = delete;

  /// Reads the next line without its terminator. Returns false at EOF.
  bool next_line(std::string& line) {
    line_offset_ = offset_;
    line.clear();
    if (file_) {
      if (!std::getline(*file_, line)) return false;
      offset_ += line.size() + (file_->eof() ? 0 : 1);
    } else {
      char buf[8192];
      bool any = false;
      while (true) {
        if (gzgets(gz_, buf, sizeof(buf)) == nullptr) break;
        any = true;
        line += buf;
        if (!line.empty() && line.back() == '\n') break;
      }
      if (!any) return false;
      offset_ += line.size();
      if (!line.empty() && line.back() == '\n') line.pop_back();
    }
    if (!line.empty() && line.back() == '\r') line.pop_back();
    return true;
  }

  std::uint64_t line_offset() const { return line_offset_; }
  const std::string& name() const { return path_; }

  std::string read_all() {
    std::string all;
    std::string line;
    bool first = true;
    while (next_line(line)) {
      if (!first) all += '\n';
      all += line;
      first = false;
    }
    return all;
  }

 private:
  std::string path_;
  std::unique_ptr<std::ifstream> file_;
  gzFile gz_ = nullptr;
  std::uint64_t offset_ = 0;
  std::uint64_t line_offset_ = 0;
};

class Emitter {
 public:
  Emitter(SourceFormat format, const DocumentSink& sink, IngestStats& stats)
      : format_(format), sink_(sink), stats_(stats) {}

  void emit(const TextSource& src, std::uint64_t offset, std::string_view id, std::string_view title,
            std::string_view body) {
    RawDocument doc;
    doc.doc_id = sanitize_utf8(trim(id), stats_.replacements);
    if (doc.doc_id.empty()) {
      skip(src, offset, "record has an empty document id");
      return;
    }
    if (!seen_.insert(doc.doc_id).second) {
      throw IngestError(src.name() + ": duplicate doc_id '" + doc.doc_id + "' at byte offset " +
                        std::to_string(offset));
    }
    doc.title = sanitize_utf8(title, stats_.replacements);
    doc.body = sanitize_utf8(body, stats_.replacements);
    doc.source_format = format_;
    ++stats_.documents;
    sink_(std::move(doc));
  }

  void skip(const TextSource& src, std::uint64_t offset, std::string message) {
    ++stats_.skipped;
    stats_.issues.push_back({src.name(), offset, std::move(message)});
  }

 private:
  SourceFormat format_;
  const DocumentSink& sink_;
  IngestStats& stats_;
  std::unordered_set<std::string> seen_;
};

// --- JSON lines -------------------------------------------------------------

void parse_jsonl(TextSource& src, Emitter& emitter) {
  std::string line;
  while (src.next_line(line)) {
    if (trim(line).empty()) continue;
    const auto offset = src.line_offset();
    nlohmann::json record;
    try {
      record = nlohmann::json::parse(line);
    } catch (const nlohmann::json::parse_error& e) {
      emitter.skip(src, offset, std::string("invalid JSON: ") + e.what());
      continue;
    }
    if (!record.is_object() || !record.contains("id")) {
      emitter.skip(src, offset, "record has no \"id\" field");
      continue;
    }
    const auto field = [&](const char* name) -> std::string {
      const auto it = record.find(name);
      if (it == record.end() || it->is_null()) return {};
      if (it->is_string()) return it->get<std::string>();
      return it->dump();
    };
    emitter.emit(src, offset, field("id"), field("title"), field("body"));
  }
}

// --- TREC SGML ----------------------------------------------------------------

void decode_entities(std::string_view in, std::string& out) {
  static constexpr std::pair<std::string_view, char> kEntities[] = {
      {"&amp;", '&'}, {"&lt;", '<'}, {"&gt;", '>'}, {"&quot;", '"'}, {"&apos;", '\''}};
  std::size_t i = 0;
  while (i < in.size()) {
    if (in[i] == '&') {
      bool matched = false;
      for (const auto& [name, ch] : kEntities) {
        if (in.substr(i, name.size()) == name) {
          out += ch;
          i += name.size();
          matched = true;
          break;
        }
      }
      if (matched) continue;
    }
    out += in[i++];
  }
}

struct TrecFields {
  std::string docno;
  std::string title;
  std::string body;
  bool has_docno = false;
};

// Flattens one <DOC> block: DOCNO and HEADLINE/TITLE go to their fields,
// every other tag is dropped and its text kept in the body.
TrecFields flatten_trec_doc(std::string_view block) {
  enum class Mode { body, docno, title };
  TrecFields f;
  Mode mode = Mode::body;
  std::size_t i = 0;
  auto target = [&]() -> std::string& {
    switch (mode) {
      case Mode::docno: return f.docno;
      case Mode::title: return f.title;
      case Mode::body: break;
    }
    return f.body;
  };
  while (i < block.size()) {
    const auto lt = block.find('<', i);
    const auto text = block.substr(i, lt == std::string_view::npos ? std::string_view::npos : lt - i);
    decode_entities(text, target());
    if (lt == std::string_view::npos) break;
    const auto gt = block.find('>', lt);
    if (gt == std::string_view::npos) {
      decode_entities(block.substr(lt), target());
      break;
    }
    std::string_view tag = block.substr(lt + 1, gt - lt - 1);
    const bool closing = !tag.empty() && tag.front() == '/';
    if (closing) tag.remove_prefix(1);
    const auto name_end = tag.find_first_of(" \t\r\n/");
    const auto name = trim(tag.substr(0, name_end));
    if (iequals(name, "DOCNO")) {
      if (!closing) f.has_docno = true;
      mode = closing ? Mode::body : Mode::docno;
    } else if (iequals(name, "HEADLINE") || iequals(name, "TITLE")) {
      if (!f.title.empty() && !closing) f.title += ' ';
      mode = closing ? Mode::body : Mode::title;
    } else {
      target() += ' ';
    }
    i = gt + 1;
  }
  f.title = collapse_whitespace(f.title);
  f.body = std::string(trim(f.body));
  return f;
}

void parse_trec(TextSource& src, Emitter& emitter) {
  std::string line;
  std::string block;
  bool in_doc = false;
  std::uint64_t doc_offset = 0;
  while (src.next_line(line)) {
    std::string_view rest = line;
    while (!rest.empty()) {
      if (!in_doc) {
        const auto open = rest.find("<DOC>");
        if (open == std::string_view::npos) break;
        in_doc = true;
        doc_offset = src.line_offset() + (rest.data() - line.data()) + open;
        block.clear();
        rest.remove_prefix(open + 5);
        continue;
      }
      const auto close = rest.find("</DOC>");
      const auto reopen = rest.find("<DOC>");
      if (reopen != std::string_view::npos && (close == std::string_view::npos || reopen < close)) {
        emitter.skip(src, doc_offset, "<DOC> opened before previous </DOC>");
        in_doc = false;
        rest.remove_prefix(reopen);
        continue;
      }
      if (close == std::string_view::npos) {
        block.append(rest);
        block += '\n';
        break;
      }
      block.append(rest.substr(0, close));
      const TrecFields f = flatten_trec_doc(block);
      if (!f.has_docno || trim(f.docno).empty()) {
        emitter.skip(src, doc_offset, "<DOC> without <DOCNO>");
      } else {
        emitter.emit(src, doc_offset, f.docno, f.title, f.body);
      }
      in_doc = false;
      rest.remove_prefix(close + 6);
    }
  }
  if (in_doc) emitter.skip(src, doc_offset, "unterminated <DOC> at end of file");
}

// --- CACM --------------------------------------------------------------------

// Records start with ".I <id>"; ".T" holds the title and ".W" the abstract.
struct DotRecord {
  std::string id;
  std::uint64_t offset = 0;
  std::string title;
  std::string abstract;
  bool valid = false;
};

template <typename OnRecord>
void parse_dot_records(TextSource& src, Emitter* emitter, OnRecord&& on_record) {
  std::string line;
  DotRecord rec;
  bool open = false;
  char section = 0;
  auto flush = [&] {
    if (open && rec.valid) on_record(rec);
    rec = DotRecord{};
    open = false;
  };
  while (src.next_line(line)) {
    if (line.size() >= 2 && line[0] == '.' && std::isalpha(static_cast<unsigned char>(line[1])) &&
        (line.size() == 2 || line[2] == ' ' || line[2] == '\t')) {
      const char tag = line[1];
      if (tag == 'I') {
        flush();
        open = true;
        rec.offset = src.line_offset();
        rec.id = std::string(trim(std::string_view(line).substr(2)));
        rec.valid = !rec.id.empty();
        if (!rec.valid && emitter != nullptr) emitter->skip(src, rec.offset, ".I record without an id");
        section = 0;
      } else {
        section = tag;
      }
      continue;
    }
    if (!open) continue;
    std::string* target = section == 'T' ? &rec.title : section == 'W' ? &rec.abstract : nullptr;
    if (target != nullptr) {
      if (!target->empty()) *target += ' ';
      *target += trim(line);
    }
  }
  flush();
}

void parse_cacm(TextSource& src, Emitter& emitter) {
  parse_dot_records(src, &emitter, [&](const DotRecord& rec) {
    std::string body = rec.title;
    if (!rec.abstract.empty()) {
      if (!body.empty()) body += ' ';
      body += rec.abstract;
    }
    emitter.emit(src, rec.offset, rec.id, rec.title, body);
  });
}

void parse_file(const fs::path& file, SourceFormat format, Emitter& emitter) {
  TextSource src(file);
  switch (format) {
    case SourceFormat::jsonl: parse_jsonl(src, emitter); break;
    case SourceFormat::trec_sgml: parse_trec(src, emitter); break;
    case SourceFormat::cacm: parse_cacm(src, emitter); break;
    case SourceFormat::plain_dir: {
      auto name = file.filename();
      if (name.extension() == ".gz") name.replace_extension();
      emitter.emit(src, 0, name.string(), "", src.read_all());
      break;
    }
  }
}

std::vector<fs::path> sorted_files(const fs::path& dir) {
  std::vector<fs::path> files;
  for (const auto& entry : fs::recursive_directory_iterator(dir)) {
    if (entry.is_regular_file()) files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());
  return files;
}

}  // namespace

IngestStats ingest_collection(const fs::path& path, SourceFormat format, const DocumentSink& sink) {
  std::error_code ec;
  if (!fs::exists(path, ec)) throw IngestError("input path does not exist: " + path.string());
  IngestStats stats;
  Emitter emitter(format, sink, stats);
  if (fs::is_directory(path)) {
    for (const auto& file : sorted_files(path)) parse_file(file, format, emitter);
  } else {
    parse_file(path, format, emitter);
  }
  return stats;
}

std::vector<RawDocument> read_collection(const fs::path& path, SourceFormat format, IngestStats* stats) {
  std::vector<RawDocument> docs;
  const IngestStats s = ingest_collection(path, format, [&docs](RawDocument&& d) { docs.push_back(std::move(d)); });
  if (stats != nullptr) *stats = s;
  return docs;
}

void write_jsonl(std::span<const RawDocument> docs, std::ostream& out) {
  for (const auto& d : docs) {
    nlohmann::ordered_json j;
    j["id"] = d.doc_id;
    j["title"] = d.title;
    j["body"] = d.body;
    out << j.dump() << '\n';
  }
}

// --- topics ------------------------------------------------------------------

namespace {

std::string strip_label(std::string_view text, std::string_view label) {
  text = trim(text);
  if (istarts_with(text, label)) text = trim(text.substr(label.size()));
  return collapse_whitespace(text);
}

// Text following <tag> up to the next '<' (works with and without closing tags).
std::string tag_text(std::string_view block, std::string_view tag, bool& found) {
  found = false;
  std::size_t pos = 0;
  while ((pos = block.find('<', pos)) != std::string_view::npos) {
    const auto gt = block.find('>', pos);
    if (gt == std::string_view::npos) break;
    if (iequals(trim(block.substr(pos + 1, gt - pos - 1)), tag)) {
      found = true;
      const auto end = block.find('<', gt + 1);
      return std::string(block.substr(gt + 1, end == std::string_view::npos ? std::string_view::npos : end - gt - 1));
    }
    pos = gt + 1;
  }
  return {};
}

void parse_trec_topics(TextSource& src, std::vector<Topic>& topics, std::vector<IngestIssue>* issues) {
  std::string line;
  std::string block;
  bool in_top = false;
  std::uint64_t offset = 0;
  auto finish = [&] {
    bool has_num = false;
    bool has_title = false;
    bool has_desc = false;
    Topic t;
    t.topic_id = strip_label(tag_text(block, "num", has_num), "Number:");
    t.title = strip_label(tag_text(block, "title", has_title), "Topic:");
    t.description = strip_label(tag_text(block, "desc", has_desc), "Description:");
    if (!has_num || t.topic_id.empty()) {
      if (issues != nullptr) issues->push_back({src.name(), offset, "topic without <num>"});
    } else if (t.title.empty()) {
      if (issues != nullptr) issues->push_back({src.name(), offset, "topic " + t.topic_id + " has no title"});
    } else {
      topics.push_back(std::move(t));
    }
  };
  while (src.next_line(line)) {
    const auto view = trim(line);
    if (!in_top) {
      if (istarts_with(view, "<top>")) {
        in_top = true;
        offset = src.line_offset();
        block.assign(view.substr(5));
        block += '\n';
      }
      continue;
    }
    if (istarts_with(view, "</top>")) {
      finish();
      in_top = false;
      continue;
    }
    block.append(line);
    block += '\n';
  }
  if (in_top && issues != nullptr) issues->push_back({src.name(), offset, "unterminated <top> block"});
}

void parse_tsv_topics(TextSource& src, std::vector<Topic>& topics, std::vector<IngestIssue>* issues) {
  std::string line;
  while (src.next_line(line)) {
    if (trim(line).empty()) continue;
    const auto tab = line.find('\t');
    Topic t;
    t.topic_id = std::string(trim(std::string_view(line).substr(0, tab)));
    if (tab != std::string::npos) t.title = collapse_whitespace(std::string_view(line).substr(tab + 1));
    if (t.topic_id.empty() || t.title.empty()) {
      if (issues != nullptr) issues->push_back({src.name(), src.line_offset(), "topic line without a title"});
      continue;
    }
    topics.push_back(std::move(t));
  }
}

}  // namespace

std::vector<Topic> ingest_topics(const fs::path& path, TopicFormat format, std::vector<IngestIssue>* issues) {
  std::error_code ec;
  if (!fs::exists(path, ec)) throw IngestError("topic file does not exist: " + path.string());
  TextSource src(path);
  std::vector<Topic> topics;
  switch (format) {
    case TopicFormat::trec_topics: parse_trec_topics(src, topics, issues); break;
    case TopicFormat::tsv: parse_tsv_topics(src, topics, issues); break;
    case TopicFormat::cacm:
      parse_dot_records(src, nullptr, [&](const DotRecord& rec) {
        Topic t{rec.id, collapse_whitespace(rec.abstract.empty() ? rec.title : rec.abstract), ""};
        if (t.title.empty()) {
          if (issues != nullptr) issues->push_back({src.name(), rec.offset, "topic " + rec.id + " has no text"});
          return;
        }
        topics.push_back(std::move(t));
      });
      break;
  }
  return topics;
}

}  // namespace embir
