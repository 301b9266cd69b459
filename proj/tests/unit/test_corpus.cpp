#include <cmath>
#include <set>

#include <gtest/gtest.h>

#include "entrank/corpus.hpp"
#include "entrank/error.hpp"
#include "entrank/random.hpp"
#include "support.hpp"

namespace entrank {
namespace {

using testing::spit;
using testing::TempDir;

template <typename Fn>
Error capture(Fn&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e;
  }
  ADD_FAILURE() << "no entrank::Error thrown";
  return Error(ErrorKind::kConfig, "none", "none");
}

TEST(Generic, TwoRecords) {
  const auto c = parse_generic(
      "{\"doc_id\": \"a\", \"text\": \"One.\", \"labels\": {\"protest\": true}}\n"
      "{\"doc_id\": \"b\", \"text\": \"Two.\", \"labels\": {\"protest\": false}}\n");
  ASSERT_EQ(c.size(), 2u);
  EXPECT_EQ(c.tasks(), std::vector<std::string>{"protest"});
  EXPECT_TRUE(c.at("a").label("protest"));
  EXPECT_FALSE(c.at("b").label("protest"));
  EXPECT_EQ(c.documents()[0].doc_id, "a");
}

TEST(Generic, DuplicateIdNamed) {
  const auto e = capture([] {
    parse_generic(
        "{\"doc_id\": \"a\", \"text\": \"x\", \"labels\": {\"protest\": true}}\n"
        "{\"doc_id\": \"a\", \"text\": \"y\", \"labels\": {\"protest\": false}}\n");
  });
  EXPECT_EQ(e.kind(), ErrorKind::kData);
  EXPECT_NE(std::string(e.what()).find("'a'"), std::string::npos) << e.what();
}

TEST(Generic, MalformedRecordReportsLine) {
  const auto e = capture([] {
    parse_generic(
        "{\"doc_id\": \"a\", \"text\": \"x\", \"labels\": {\"protest\": true}}\n"
        "{\"doc_id\": \"b\", \"text\": \n");
  });
  EXPECT_EQ(e.kind(), ErrorKind::kData);
  EXPECT_NE(std::string(e.what()).find("line 2"), std::string::npos) << e.what();
}

TEST(Generic, MissingFieldsRejected) {
  EXPECT_THROW(parse_generic("{\"text\": \"x\", \"labels\": {\"protest\": true}}\n"), Error);
  EXPECT_THROW(parse_generic("{\"doc_id\": \"a\", \"labels\": {\"protest\": true}}\n"), Error);
  EXPECT_THROW(parse_generic("{\"doc_id\": \"a\", \"text\": \"x\"}\n"), Error);
  // Second record lacks a task the first one has.
  EXPECT_THROW(parse_generic("{\"doc_id\": \"a\", \"text\": \"x\", \"labels\": {\"p\": true, \"q\": false}}\n"
                             "{\"doc_id\": \"b\", \"text\": \"y\", \"labels\": {\"p\": true}}\n"),
               Error);
}

TEST(Generic, SentencesPreservedAndTextUntouched) {
  const auto c = parse_generic(
      "{\"doc_id\": \"a\", \"text\": \"  Mixed CASE.  \", \"sentences\": [\"A.\", \"B.\"], "
      "\"labels\": {\"protest\": true}}\n");
  const auto& d = c.at("a");
  ASSERT_TRUE(d.sentences.has_value());
  EXPECT_EQ(*d.sentences, (std::vector<std::string>{"A.", "B."}));
  EXPECT_EQ(d.text, "  Mixed CASE.  ");
}

TEST(Generic, FileRoundTrip) {
  TempDir tmp;
  const auto original = parse_generic(
      "{\"doc_id\": \"x1\", \"text\": \"T\\u00e9st \\\"q\\\"\", \"sentences\": [\"S1\"], "
      "\"labels\": {\"a\": true, \"b\": false}}\n"
      "{\"doc_id\": \"x2\", \"text\": \"Other\", \"labels\": {\"a\": false, \"b\": true}}\n");
  export_generic(original, tmp / "c.jsonl");
  const auto back = ingest_generic(tmp / "c.jsonl");
  ASSERT_EQ(back.size(), original.size());
  EXPECT_EQ(back.tasks(), original.tasks());
  for (std::size_t i = 0; i < back.size(); ++i) {
    EXPECT_EQ(back.documents()[i].doc_id, original.documents()[i].doc_id);
    EXPECT_EQ(back.documents()[i].text, original.documents()[i].text);
    EXPECT_EQ(back.documents()[i].sentences, original.documents()[i].sentences);
    EXPECT_EQ(back.documents()[i].labels, original.documents()[i].labels);
  }
}

TEST(Generic, IngestionIsDeterministic) {
  const std::string text =
      "{\"doc_id\": \"z\", \"text\": \"1\", \"labels\": {\"t\": true}}\n"
      "{\"doc_id\": \"a\", \"text\": \"2\", \"labels\": {\"t\": false}}\n"
      "{\"doc_id\": \"m\", \"text\": \"3\", \"labels\": {\"t\": true}}\n";
  const auto a = parse_generic(text);
  const auto b = parse_generic(text);
  ASSERT_EQ(a.size(), 3u);
  for (std::size_t i = 0; i < a.size(); ++i) EXPECT_EQ(a.documents()[i].doc_id, b.documents()[i].doc_id);
  EXPECT_EQ(a.documents()[0].doc_id, "z");
}

TEST(Corpus, ConstructionInvariants) {
  EXPECT_THROW(Corpus("c", {"t"}, {}), Error);
  Document d{"a", "x", std::nullopt, {{"t", true}}};
  EXPECT_THROW(Corpus("c", {}, {d}), Error);
  Document missing{"b", "y", std::nullopt, {}};
  EXPECT_THROW(Corpus("c", {"t"}, {d, missing}), Error);
  EXPECT_THROW(Corpus("c", {"t"}, {d, d}), Error);
}

// India Police Events layout: doc-level and sentence-level files.
void write_india(const TempDir& dir, const std::string& docs, const std::string& sents) {
  spit(dir / "doc_level.jsonl", docs);
  spit(dir / "sent_level.jsonl", sents);
}

std::string label_obj(bool kill, bool arrest = false, bool fail = false, bool force = false, bool any = false) {
  auto b = [](bool v) { return v ? "1" : "0"; };
  return std::string("{\"killing\": ") + b(kill) + ", \"arrest\": " + b(arrest) + ", \"fail\": " + b(fail) +
         ", \"force\": " + b(force) + ", \"any_action\": " + b(any) + "}";
}

TEST(India, OneKillSentenceMakesDocPositive) {
  TempDir tmp;
  write_india(tmp, "{\"doc_id\": \"g1\", \"doc_text\": \"Calm. Police shot a man.\"}\n",
              "{\"doc_id\": \"g1\", \"sent_id\": 0, \"sent_text\": \"Calm.\", \"label\": " + label_obj(false) + "}\n" +
                  "{\"doc_id\": \"g1\", \"sent_id\": 1, \"sent_text\": \"Police shot a man.\", \"label\": " +
                  label_obj(true, false, false, true, true) + "}\n");
  const auto c = ingest_india_police(tmp.path());
  ASSERT_EQ(c.size(), 1u);
  const auto& d = c.at("g1");
  EXPECT_TRUE(d.label("kill"));
  EXPECT_TRUE(d.label("force"));
  EXPECT_TRUE(d.label("any_action"));
  EXPECT_FALSE(d.label("arrest"));
  EXPECT_FALSE(d.label("fail"));
  EXPECT_EQ(c.tasks(), india_police_tasks());
}

TEST(India, SentencesOrderedBySentenceId) {
  TempDir tmp;
  write_india(tmp, "{\"doc_id\": \"g1\"}\n",
              "{\"doc_id\": \"g1\", \"sent_id\": 2, \"sent_text\": \"C.\", \"label\": " + label_obj(false) + "}\n" +
                  "{\"doc_id\": \"g1\", \"sent_id\": 0, \"sent_text\": \"A.\", \"label\": " + label_obj(false) + "}\n" +
                  "{\"doc_id\": \"g1\", \"sent_id\": 1, \"sent_text\": \"B.\", \"label\": " + label_obj(false) + "}\n");
  const auto c = ingest_india_police(tmp.path());
  EXPECT_EQ(*c.at("g1").sentences, (std::vector<std::string>{"A.", "B.", "C."}));
  EXPECT_EQ(c.at("g1").text, "A. B. C.");
}

TEST(India, OrRuleHoldsForEveryDocAndTask) {
  TempDir tmp;
  std::string docs, sents;
  Prng rng(5);
  std::map<std::string, std::map<std::string, bool>> expected;
  for (int d = 0; d < 20; ++d) {
    const std::string id = "doc" + std::to_string(d);
    docs += "{\"doc_id\": \"" + id + "\"}\n";
    const int n = 1 + static_cast<int>(rng.below(5));
    for (const auto& t : india_police_tasks()) expected[id][t] = false;
    for (int s = 0; s < n; ++s) {
      bool v[5];
      for (auto& x : v) x = rng.below(4) == 0;
      int k = 0;
      for (const auto& t : india_police_tasks()) {
        const bool hit = v[k++];
        expected[id][t] = expected[id][t] || hit;
      }
      sents += "{\"doc_id\": \"" + id + "\", \"sent_id\": " + std::to_string(s) + ", \"sent_text\": \"S" +
               std::to_string(s) + ".\", \"label\": " + label_obj(v[0], v[1], v[2], v[3], v[4]) + "}\n";
    }
  }
  write_india(tmp, docs, sents);
  const auto c = ingest_india_police(tmp.path());
  for (const auto& d : c.documents()) {
    for (const auto& t : india_police_tasks()) EXPECT_EQ(d.label(t), expected[d.doc_id][t]) << d.doc_id << " " << t;
  }
}

TEST(India, UnknownDocumentInSentenceFile) {
  TempDir tmp;
  write_india(tmp, "{\"doc_id\": \"g1\"}\n",
              "{\"doc_id\": \"ghost\", \"sent_id\": 0, \"sent_text\": \"A.\", \"label\": " + label_obj(false) + "}\n");
  const auto e = capture([&] { ingest_india_police(tmp.path()); });
  EXPECT_EQ(e.kind(), ErrorKind::kData);
  EXPECT_NE(std::string(e.what()).find("ghost"), std::string::npos);
}

TEST(India, LayoutMismatch) {
  TempDir tmp;
  spit(tmp / "doc_level.jsonl", "{\"doc_id\": \"g1\"}\n");
  const auto missing = capture([&] { ingest_india_police(tmp.path()); });
  EXPECT_NE(std::string(missing.what()).find("layout mismatch"), std::string::npos);

  write_india(tmp, "{\"doc_id\": \"g1\"}\n", "{\"doc_id\": \"g1\", \"sent_id\": 0, \"text\": \"A.\"}\n");
  const auto field = capture([&] { ingest_india_police(tmp.path()); });
  EXPECT_NE(std::string(field.what()).find("layout mismatch"), std::string::npos);
}

TEST(India, LayoutOverridesFromJson) {
  TempDir tmp;
  spit(tmp / "docs.jsonl", "{\"id\": 7}\n");
  spit(tmp / "sents.jsonl", "{\"article\": 7, \"n\": 0, \"s\": \"A.\", \"y\": {\"k\": 1, \"arrest\": 0, "
                            "\"fail\": 0, \"force\": 0, \"any_action\": 1}}\n");
  spit(tmp / "layout.json",
       "{\"doc_file\": \"docs.jsonl\", \"sent_file\": \"sents.jsonl\", \"doc_id_field\": \"id\", "
       "\"sent_doc_id_field\": \"article\", \"sent_index_field\": \"n\", \"sent_text_field\": \"s\", "
       "\"sent_labels_field\": \"y\", \"task_keys\": {\"kill\": \"k\", \"arrest\": \"arrest\", \"fail\": \"fail\", "
       "\"force\": \"force\", \"any_action\": \"any_action\"}}");
  const auto c = ingest_india_police(tmp.path(), load_india_layout(tmp / "layout.json"));
  EXPECT_TRUE(c.at("7").label("kill"));
  EXPECT_TRUE(c.at("7").label("any_action"));
}

TEST(India, DocLevelDisagreementIsNoted) {
  TempDir tmp;
  write_india(tmp, "{\"doc_id\": \"g1\", \"label\": " + label_obj(true) + "}\n",
              "{\"doc_id\": \"g1\", \"sent_id\": 0, \"sent_text\": \"A.\", \"label\": " + label_obj(false) + "}\n");
  const auto c = ingest_india_police(tmp.path());
  EXPECT_FALSE(c.at("g1").label("kill"));
  ASSERT_EQ(c.notes().size(), 1u);
  EXPECT_NE(c.notes()[0].find("kill"), std::string::npos);
}

TEST(India, SyntheticCorpusFlagsStatsMismatch) {
  TempDir tmp;
  write_india(tmp, "{\"doc_id\": \"g1\"}\n",
              "{\"doc_id\": \"g1\", \"sent_id\": 0, \"sent_text\": \"A.\", \"label\": " + label_obj(true) + "}\n");
  const auto report = verify_stats(ingest_india_police(tmp.path()));
  EXPECT_FALSE(report.ok());
  EXPECT_EQ(report.documents, 1u);
  EXPECT_EQ(report.sentences, 1u);
}

// Synthetic ProtestNews-shaped file: n documents, the first k positive.
std::string protest_file(std::size_t n, std::size_t k) {
  std::string out;
  for (std::size_t i = 0; i < n; ++i) {
    out += "{\"id\": " + std::to_string(100000 + i) + ", \"text\": \"Article " + std::to_string(i) +
           ".\", \"label\": " + (i < k ? "1" : "0") + "}\n";
  }
  return out;
}

TEST(ProtestNews, FullFileKeepsEverything) {
  TempDir tmp;
  spit(tmp / "pn.jsonl", protest_file(30, 7));
  const auto c = ingest_protestnews(tmp / "pn.jsonl", std::nullopt, 0);
  EXPECT_EQ(c.size(), 30u);
  EXPECT_EQ(verify_stats(c).tasks[0].positives, 7u);
  EXPECT_EQ(c.name(), "protestnews");
}

TEST(ProtestNews, SeededSubsetIsStable) {
  TempDir tmp;
  spit(tmp / "pn.jsonl", protest_file(200, 40));
  auto ids = [&](std::uint64_t seed) {
    std::vector<std::string> out;
    const auto corpus = ingest_protestnews(tmp / "pn.jsonl", 50, seed);
    for (const auto& d : corpus.documents()) out.push_back(d.doc_id);
    return out;
  };
  const auto a = ids(42);
  EXPECT_EQ(a.size(), 50u);
  EXPECT_EQ(a, ids(42));
  EXPECT_NE(a, ids(43));
  EXPECT_EQ(std::set<std::string>(a.begin(), a.end()).size(), 50u);
  // Sampled documents keep file order.
  for (std::size_t i = 1; i < a.size(); ++i) EXPECT_LT(std::stoi(a[i - 1]), std::stoi(a[i]));
}

TEST(ProtestNews, SubsetTooLarge) {
  TempDir tmp;
  spit(tmp / "pn.jsonl", protest_file(10, 2));
  EXPECT_THROW(ingest_protestnews(tmp / "pn.jsonl", 11, 1), Error);
}

// Subset positive fraction against hypergeometric bounds for a file with
// the published full-split size and positive count.
TEST(ProtestNews, SubsetFractionWithinHypergeometricBounds) {
  const double N = 9327, K = 1912, n = 1257;
  const double mean = K / N;
  const double sd = std::sqrt(n * mean * (1 - mean) * (N - n) / (N - 1)) / n;
  const double lo = mean - 4 * sd, hi = mean + 4 * sd;
  EXPECT_GT(lo, 0.16);
  EXPECT_LT(hi, 0.25);

  TempDir tmp;
  spit(tmp / "pn.jsonl", protest_file(9327, 1912));
  for (std::uint64_t seed : {1, 2, 3, 2024, 987654321}) {
    const auto c = ingest_protestnews(tmp / "pn.jsonl", 1257, seed);
    const auto f = verify_stats(c).tasks[0].fraction;
    EXPECT_GE(f, lo) << "seed " << seed;
    EXPECT_LE(f, hi) << "seed " << seed;
    EXPECT_GE(f, 0.17);
    EXPECT_LE(f, 0.25);
  }
}

TEST(Stats, Summaries) {
  const auto one = testing::labeled_corpus({true, false, false, false});
  const auto r = verify_stats(one);
  ASSERT_EQ(r.tasks.size(), 1u);
  EXPECT_EQ(r.tasks[0].positives, 1u);
  EXPECT_EQ(r.tasks[0].total, 4u);
  EXPECT_DOUBLE_EQ(r.tasks[0].fraction, 0.25);
  EXPECT_TRUE(r.ok());

  const auto none = verify_stats(testing::labeled_corpus({false, false, false}));
  EXPECT_EQ(none.tasks[0].positives, 0u);
  EXPECT_EQ(none.tasks[0].total, 3u);
  EXPECT_EQ(none.tasks[0].fraction, 0.0);
}

TEST(Stats, SentenceTotalIsSumOverDocuments) {
  std::vector<Document> docs;
  std::size_t total = 0;
  for (int i = 0; i < 5; ++i) {
    std::vector<std::string> s(static_cast<std::size_t>(i + 1), "x.");
    total += s.size();
    docs.push_back({"d" + std::to_string(i), "x.", s, {{"t", i % 2 == 0}}});
  }
  EXPECT_EQ(verify_stats(Corpus("c", {"t"}, docs)).sentences, total);
}

TEST(Stats, PublishedCountsAndMismatches) {
  const auto e = india_police_expected();
  EXPECT_EQ(*e.documents, 1257u);
  EXPECT_EQ(*e.sentences, 21391u);
  EXPECT_EQ(e.tasks.at("kill").positives, 50u);
  EXPECT_EQ(e.tasks.at("arrest").positives, 128u);
  EXPECT_EQ(e.tasks.at("fail").positives, 114u);
  EXPECT_EQ(e.tasks.at("force").positives, 90u);
  EXPECT_EQ(e.tasks.at("any_action").positives, 457u);
  EXPECT_NEAR(100.0 * 50 / 1257, e.tasks.at("kill").published_percent, 0.005);
  // The printed 36.24% is kept as published although 457/1257 is 36.36%.
  EXPECT_EQ(e.tasks.at("any_action").published_percent, 36.24);

  ExpectedCorpusStats expected;
  expected.documents = 3;
  expected.tasks["t"] = {2, 66.67};
  Corpus c("c", {"t"},
           {{"a", "x", std::nullopt, {{"t", true}}}, {"b", "x", std::nullopt, {{"t", false}}}, {"c", "x", std::nullopt, {{"t", false}}}},
           expected);
  const auto r = verify_stats(c);
  EXPECT_FALSE(r.ok());
  EXPECT_FALSE(r.tasks[0].matches_expected);
  EXPECT_NE(format_stats(r).find("MISMATCH"), std::string::npos);
}

TEST(Prng, StandardEngineSequence) {
  // The 10000th output of a default-seeded mt19937_64 is fixed by the standard.
  Prng p(5489u);
  std::uint64_t x = 0;
  for (int i = 0; i < 10000; ++i) x = p.next();
  EXPECT_EQ(x, 9981545732273789042ULL);
}

TEST(Prng, SampleWithoutReplacement) {
  const auto s = sample_without_replacement(100, 30, 9);
  ASSERT_EQ(s.size(), 30u);
  EXPECT_TRUE(std::is_sorted(s.begin(), s.end()));
  EXPECT_EQ(std::set<std::size_t>(s.begin(), s.end()).size(), 30u);
  EXPECT_LT(s.back(), 100u);
  EXPECT_EQ(s, sample_without_replacement(100, 30, 9));
  EXPECT_EQ(sample_without_replacement(5, 5, 1), (std::vector<std::size_t>{0, 1, 2, 3, 4}));

  // Every index is equally likely to be drawn.
  std::vector<int> hits(10, 0);
  for (std::uint64_t seed = 0; seed < 5000; ++seed) {
    for (auto i : sample_without_replacement(10, 3, seed)) ++hits[i];
  }
  for (int h : hits) EXPECT_NEAR(h, 1500, 150);
}

}  // namespace
}  // namespace entrank
