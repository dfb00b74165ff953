#include <sstream>

#include <gtest/gtest.h>
#include <zlib.h>

#include "embir/corpus.hpp"
#include "embir/errors.hpp"
#include "test_support.hpp"

namespace embir {
namespace {

using testing::TempDir;
using testing::write_file;

TEST(IngestJsonl, RecordsInFileOrder) {
  TempDir dir;
  write_file(dir / "c.jsonl",
             "{\"id\":\"d3\",\"title\":\"T3\",\"body\":\"three\"}\n"
             "{\"id\":\"d1\",\"title\":\"T1\",\"body\":\"one\"}\n"
             "{\"id\":\"d2\",\"title\":\"\",\"body\":\"two\"}\n");
  IngestStats stats;
  const auto docs = read_collection(dir / "c.jsonl", SourceFormat::jsonl, &stats);
  ASSERT_EQ(docs.size(), 3u);
  EXPECT_EQ(docs[0], (RawDocument{"d3", "T3", "three", SourceFormat::jsonl}));
  EXPECT_EQ(docs[1].doc_id, "d1");
  EXPECT_EQ(docs[2].doc_id, "d2");
  EXPECT_EQ(stats.documents, 3u);
  EXPECT_EQ(stats.skipped, 0u);
}

TEST(IngestJsonl, MalformedRecordSkippedWithOffset) {
  TempDir dir;
  const std::string first = "{\"id\":\"d1\",\"body\":\"ok\"}\n";
  write_file(dir / "c.jsonl", first + "{not json\n{\"id\":\"d2\",\"body\":\"ok\"}\n");
  IngestStats stats;
  const auto docs = read_collection(dir / "c.jsonl", SourceFormat::jsonl, &stats);
  EXPECT_EQ(docs.size(), 2u);
  EXPECT_EQ(stats.skipped, 1u);
  ASSERT_EQ(stats.issues.size(), 1u);
  EXPECT_EQ(stats.issues[0].offset, first.size());
}

TEST(IngestJsonl, DuplicateIdNamesTheId) {
  TempDir dir;
  write_file(dir / "c.jsonl", "{\"id\":\"d1\",\"body\":\"a\"}\n{\"id\":\" d1 \",\"body\":\"b\"}\n");
  try {
    read_collection(dir / "c.jsonl", SourceFormat::jsonl);
    FAIL() << "expected IngestError";
  } catch (const IngestError& e) {
    EXPECT_NE(std::string(e.what()).find("'d1'"), std::string::npos);
  }
}

TEST(IngestJsonl, IdsAreCaseSensitive) {
  TempDir dir;
  write_file(dir / "c.jsonl", "{\"id\":\"D1\",\"body\":\"a\"}\n{\"id\":\"d1\",\"body\":\"b\"}\n");
  EXPECT_EQ(read_collection(dir / "c.jsonl", SourceFormat::jsonl).size(), 2u);
}

TEST(Ingest, EmptyFileYieldsNothing) {
  TempDir dir;
  write_file(dir / "empty.jsonl", "");
  IngestStats stats;
  EXPECT_TRUE(read_collection(dir / "empty.jsonl", SourceFormat::jsonl, &stats).empty());
  EXPECT_EQ(stats.documents, 0u);
}

TEST(Ingest, MissingPathIsError) { EXPECT_THROW(read_collection("/nonexistent/x.jsonl", SourceFormat::jsonl), IngestError); }

TEST(Ingest, UnknownFormatIsConfigError) { EXPECT_THROW(parse_source_format("warc"), ConfigError); }

TEST(Ingest, InvalidUtf8ReplacedAndCounted) {
  TempDir dir;
  write_file(dir / "doc1", "caf\xe9 au lait \xff");
  IngestStats stats;
  const auto docs = read_collection(dir.path(), SourceFormat::plain_dir, &stats);
  ASSERT_EQ(docs.size(), 1u);
  EXPECT_EQ(docs[0].body, "caf\xEF\xBF\xBD au lait \xEF\xBF\xBD");
  EXPECT_EQ(stats.replacements, 2u);
}

TEST(IngestTrec, TwoDocuments) {
  TempDir dir;
  write_file(dir / "trec.txt",
             "<DOC>\n<DOCNO> A1 </DOCNO>\n<HEADLINE>First story</HEADLINE>\n<TEXT>\nAlpha &amp; beta.\n</TEXT>\n</DOC>\n"
             "<DOC>\n<DOCNO>A2</DOCNO>\n<DATE>1999</DATE>\n<TEXT><P>Gamma</P><P>delta</P></TEXT>\n</DOC>\n");
  const auto docs = read_collection(dir / "trec.txt", SourceFormat::trec_sgml);
  ASSERT_EQ(docs.size(), 2u);
  EXPECT_EQ(docs[0].doc_id, "A1");
  EXPECT_EQ(docs[0].title, "First story");
  EXPECT_EQ(docs[0].body, "Alpha & beta.");
  EXPECT_EQ(docs[1].doc_id, "A2");
  EXPECT_EQ(docs[1].title, "");
  // Other tags are dropped but their text stays in the body.
  EXPECT_NE(docs[1].body.find("1999"), std::string::npos);
  EXPECT_NE(docs[1].body.find("Gamma"), std::string::npos);
  EXPECT_EQ(docs[1].body.find("Gammadelta"), std::string::npos);
}

TEST(IngestTrec, DocWithoutDocnoSkipped) {
  TempDir dir;
  write_file(dir / "trec.txt", "<DOC><TEXT>orphan</TEXT></DOC>\n<DOC><DOCNO>B</DOCNO><TEXT>x</TEXT></DOC>\n<DOC><DOCNO>C</DOCNO>");
  IngestStats stats;
  const auto docs = read_collection(dir / "trec.txt", SourceFormat::trec_sgml, &stats);
  ASSERT_EQ(docs.size(), 1u);
  EXPECT_EQ(docs[0].doc_id, "B");
  EXPECT_EQ(stats.skipped, 2u);  // no DOCNO, unterminated
}

TEST(IngestTrec, GzipTransparent) {
  TempDir dir;
  const std::string text = "<DOC>\n<DOCNO>Z1</DOCNO>\n<TEXT>zipped words</TEXT>\n</DOC>\n";
  gzFile gz = gzopen((dir / "c.trec.gz").c_str(), "wb");
  gzwrite(gz, text.data(), static_cast<unsigned>(text.size()));
  gzclose(gz);
  const auto docs = read_collection(dir / "c.trec.gz", SourceFormat::trec_sgml);
  ASSERT_EQ(docs.size(), 1u);
  EXPECT_EQ(docs[0].body, "zipped words");
}

TEST(IngestCacm, TitleAndAbstractInBody) {
  TempDir dir;
  write_file(dir / "cacm.all",
             ".I 1\n.T\nPreliminary Report\n.B\nCACM December, 1958\n.A\nPerlis, A. J.\n.N\nCA581203\n"
             ".I 2\n.T\nExtraction of Roots\n.W\nA method for roots\nof equations.\n.X\n2\t5\t2\n");
  const auto docs = read_collection(dir / "cacm.all", SourceFormat::cacm);
  ASSERT_EQ(docs.size(), 2u);
  EXPECT_EQ(docs[0].doc_id, "1");
  EXPECT_EQ(docs[0].title, "Preliminary Report");
  EXPECT_EQ(docs[0].body, "Preliminary Report");
  EXPECT_EQ(docs[1].body, "Extraction of Roots A method for roots of equations.");
}

TEST(IngestPlainDir, FilenameIsIdSortedOrder) {
  TempDir dir;
  write_file(dir / "b.txt", "second");
  write_file(dir / "a.txt", "first");
  const auto docs = read_collection(dir.path(), SourceFormat::plain_dir);
  ASSERT_EQ(docs.size(), 2u);
  EXPECT_EQ(docs[0].doc_id, "a.txt");
  EXPECT_EQ(docs[1].body, "second");
}

TEST(IngestProperty, JsonlRoundTripPreservesDocuments) {
  std::mt19937_64 rng(3);
  auto docs = testing::random_corpus(rng, 40, 30, 12);
  for (std::size_t i = 0; i < docs.size(); ++i) {
    docs[i].title = i % 3 == 0 ? "Title \"quoted\" \\ é" : "";
    docs[i].body += i % 5 == 0 ? "\nline two\ttab" : "";
  }
  TempDir dir;
  {
    std::ofstream out(dir / "rt.jsonl");
    write_jsonl(docs, out);
  }
  const auto back = read_collection(dir / "rt.jsonl", SourceFormat::jsonl);
  EXPECT_EQ(back, docs);
}

TEST(IngestStreaming, LargeCollectionIsStreamed) {
  TempDir dir;
  {
    std::ofstream out(dir / "big.jsonl");
    for (int i = 0; i < 10000; ++i) out << "{\"id\":\"d" << i << "\",\"body\":\"word" << i % 97 << " filler text\"}\n";
  }
  // The sink sees each document once and never needs more than one at a time.
  std::size_t seen = 0;
  std::size_t max_body = 0;
  const auto stats = ingest_collection(dir / "big.jsonl", SourceFormat::jsonl, [&](RawDocument&& d) {
    ++seen;
    max_body = std::max(max_body, d.body.size());
  });
  EXPECT_EQ(seen, 10000u);
  EXPECT_EQ(stats.documents, 10000u);
  EXPECT_LT(max_body, 32u);
}

TEST(Topics, TsvExampleQuery) {
  TempDir dir;
  write_file(dir / "t.tsv", "301\trecent research about AI\n\n302\t  spaced   out  \n");
  const auto topics = ingest_topics(dir / "t.tsv", TopicFormat::tsv);
  ASSERT_EQ(topics.size(), 2u);
  EXPECT_EQ(topics[0], (Topic{"301", "recent research about AI", ""}));
  EXPECT_EQ(topics[1].title, "spaced out");
}

TEST(Topics, TsvMissingTitleReported) {
  TempDir dir;
  write_file(dir / "t.tsv", "301\n302\tok\n");
  std::vector<IngestIssue> issues;
  const auto topics = ingest_topics(dir / "t.tsv", TopicFormat::tsv, &issues);
  ASSERT_EQ(topics.size(), 1u);
  EXPECT_EQ(issues.size(), 1u);
}

TEST(Topics, TrecTopicBlock) {
  TempDir dir;
  write_file(dir / "topics.txt",
             "<top>\n<num> Number: 307\n<title> X\n\n<desc> Description:\nSomething about X.\n\n<narr> Narrative:\nAnything.\n</top>\n");
  const auto topics = ingest_topics(dir / "topics.txt", TopicFormat::trec_topics);
  ASSERT_EQ(topics.size(), 1u);
  EXPECT_EQ(topics[0].topic_id, "307");
  EXPECT_EQ(topics[0].title, "X");
  EXPECT_EQ(topics[0].description, "Something about X.");
  EXPECT_EQ(query_text(topics[0], TopicField::title), "X");
  EXPECT_EQ(query_text(topics[0], TopicField::title_description), "X Something about X.");
}

TEST(Topics, ClosedTagVariant) {
  TempDir dir;
  write_file(dir / "topics.txt", "<top>\n<num>321</num>\n<title>women in parliaments</title>\n</top>\n");
  const auto topics = ingest_topics(dir / "topics.txt", TopicFormat::trec_topics);
  ASSERT_EQ(topics.size(), 1u);
  EXPECT_EQ(topics[0].topic_id, "321");
  EXPECT_EQ(topics[0].title, "women in parliaments");
}

TEST(Topics, BlankFileIsEmpty) {
  TempDir dir;
  write_file(dir / "t.tsv", "\n\n   \n");
  EXPECT_TRUE(ingest_topics(dir / "t.tsv", TopicFormat::tsv).empty());
}

}  // namespace
}  // namespace embir
