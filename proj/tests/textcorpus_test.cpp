#include <gtest/gtest.h>

#include <fstream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "hypertext/textcorpus.hpp"

namespace tc = hypertext::textcorpus;

TEST(ParseLabeledLine, SingleLabel) {
  const auto p = tc::parse_labeled_line("__label__2 hello world", {});
  EXPECT_EQ(p.labels, (std::vector<std::string>{"2"}));
  EXPECT_EQ(p.tokens, (std::vector<std::string>{"hello", "world"}));
}

TEST(ParseLabeledLine, MultipleLabelsAnywhere) {
  const auto p = tc::parse_labeled_line("__label__a __label__b x", {});
  EXPECT_EQ(p.labels, (std::vector<std::string>{"a", "b"}));
  EXPECT_EQ(p.tokens, (std::vector<std::string>{"x"}));
  const auto q = tc::parse_labeled_line("x __label__a y", {});
  EXPECT_EQ(q.labels, (std::vector<std::string>{"a"}));
  EXPECT_EQ(q.tokens, (std::vector<std::string>{"x", "y"}));
}

TEST(ParseLabeledLine, NoLabelOnlyErrorsInTraining) {
  EXPECT_THROW(tc::parse_labeled_line("no label here", {}), hypertext::NoLabel);
  const auto p = tc::parse_labeled_line("no label here", {}, tc::ParseMode::kPredict);
  EXPECT_TRUE(p.labels.empty());
  EXPECT_EQ(p.tokens.size(), 3u);
}

TEST(ParseLabeledLine, BarePrefixIsAToken) {
  const auto p = tc::parse_labeled_line("__label__x __label__", {});
  EXPECT_EQ(p.labels, (std::vector<std::string>{"x"}));
  EXPECT_EQ(p.tokens, (std::vector<std::string>{"__label__"}));
}

TEST(ParseLabeledLine, CustomPrefix) {
  tc::CorpusConfig cfg;
  cfg.label_prefix = "#";
  const auto p = tc::parse_labeled_line("#pos good __label__x", cfg);
  EXPECT_EQ(p.labels, (std::vector<std::string>{"pos"}));
  EXPECT_EQ(p.tokens, (std::vector<std::string>{"good", "__label__x"}));
}

TEST(SplitWhitespace, UnicodeWhitespaceNoNormalization) {
  // tab, NBSP, ideographic space, em space, CR; case and punctuation kept.
  const std::string line = "Hello,\tWorld\xC2\xA0" "caf\xC3\xA9\xE3\x80\x80" "A\xE2\x80\x83" "b\r";
  const auto toks = tc::split_whitespace(line);
  ASSERT_EQ(toks.size(), 5u);
  EXPECT_EQ(toks[0], "Hello,");
  EXPECT_EQ(toks[1], "World");
  EXPECT_EQ(toks[2], "caf\xC3\xA9");
  EXPECT_EQ(toks[3], "A");
  EXPECT_EQ(toks[4], "b");
  EXPECT_TRUE(tc::split_whitespace("  \t ").empty());
  // A lone lead byte at the end is not whitespace.
  EXPECT_EQ(tc::split_whitespace("x\xC2").size(), 1u);
}

TEST(BuildVocab, MinCountDropsRareWords) {
  std::istringstream in("__label__1 a a b\n");
  tc::CorpusConfig cfg;
  cfg.min_count = 2;
  const auto v = tc::Vocab::build(in, cfg);
  ASSERT_EQ(v.n_words(), 1);
  EXPECT_EQ(v.word(0).text, "a");
  EXPECT_EQ(v.word(0).count, 2u);
  EXPECT_EQ(v.word_id("b"), -1);
  ASSERT_EQ(v.n_labels(), 1);
  EXPECT_EQ(v.label(0).text, "1");
}

TEST(BuildVocab, FirstSeenOrder) {
  std::istringstream in("__label__1 a a b\n\n__label__2 c b a\n");
  const auto v = tc::Vocab::build(in, {});
  ASSERT_EQ(v.n_words(), 3);
  EXPECT_EQ(v.word_id("a"), 0);
  EXPECT_EQ(v.word_id("b"), 1);
  EXPECT_EQ(v.word_id("c"), 2);
  EXPECT_EQ(v.n_labels(), 2);
  EXPECT_EQ(v.label_id("2"), 1);
  EXPECT_EQ(v.word(1).count, 2u);
}

TEST(BuildVocab, Errors) {
  std::istringstream empty("");
  EXPECT_THROW(tc::Vocab::build(empty, {}), hypertext::EmptyCorpus);
  std::istringstream blank("\n  \n");
  EXPECT_THROW(tc::Vocab::build(blank, {}), hypertext::EmptyCorpus);
  std::istringstream unlabeled("__label__1 a\nno label\n");
  EXPECT_THROW(tc::Vocab::build(unlabeled, {}), hypertext::NoLabel);
  tc::CorpusConfig bad;
  bad.min_count = 0;
  std::istringstream ok("__label__1 a\n");
  EXPECT_THROW(tc::Vocab::build(ok, bad), hypertext::ConfigError);
}

TEST(ExtractNgrams, Counts) {
  tc::CorpusConfig cfg;
  cfg.word_ngrams = 1;
  const std::vector<std::string> ab{"a", "b"};
  EXPECT_TRUE(tc::extract_ngrams(ab, 10, cfg).empty());
  cfg.word_ngrams = 2;
  const auto ids = tc::extract_ngrams(ab, 10, cfg);
  ASSERT_EQ(ids.size(), 1u);
  EXPECT_EQ(ids, tc::extract_ngrams(ab, 10, cfg));
  cfg.bucket = 0;
  EXPECT_TRUE(tc::extract_ngrams(ab, 10, cfg).empty());
}

TEST(ExtractNgrams, LengthAndRangeProperty) {
  std::mt19937_64 rng(5);
  std::uniform_int_distribution<int> len(0, 12);
  std::uniform_int_distribution<int> word(0, 30);
  std::uniform_int_distribution<int> ngrams(1, 5);
  std::uniform_int_distribution<int> bucket(1, 1000);
  for (int trial = 0; trial < 500; ++trial) {
    tc::CorpusConfig cfg;
    cfg.word_ngrams = ngrams(rng);
    cfg.bucket = bucket(rng);
    const int m = len(rng);
    std::vector<std::string> toks;
    for (int i = 0; i < m; ++i) toks.push_back("w" + std::to_string(word(rng)));
    const std::int32_t n_words = 17;
    const auto ids = tc::extract_ngrams(toks, n_words, cfg);
    std::size_t expected = 0;
    for (int n = 2; n <= cfg.word_ngrams; ++n) expected += static_cast<std::size_t>(std::max(0, m - n + 1));
    ASSERT_EQ(ids.size(), expected);
    for (auto id : ids) {
      ASSERT_GE(id, n_words);
      ASSERT_LT(id, n_words + cfg.bucket);
    }
  }
}

TEST(ExtractNgrams, GoldenHashes) {
  // Values written by tests/oracles/oracle.py, an independent FNV-1a.
  std::ifstream in(HYPERTEXT_TEST_DATA_DIR "/ngram_hash_golden.tsv");
  ASSERT_TRUE(in) << "missing golden file";
  std::string line;
  int checked = 0;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::istringstream fields(line);
    std::string joined, hex, folded;
    std::getline(fields, joined, '\t');
    std::getline(fields, hex, '\t');
    std::getline(fields, folded, '\t');
    const auto views = tc::split_whitespace(joined);
    EXPECT_EQ(tc::ngram_hash(views), std::stoull(hex, nullptr, 16)) << joined;
    tc::CorpusConfig cfg;
    cfg.word_ngrams = static_cast<int>(views.size());
    const auto ids = tc::extract_ngrams(views, 0, cfg);
    ASSERT_FALSE(ids.empty());
    EXPECT_EQ(ids.back(), std::stoi(folded)) << joined;
    ++checked;
  }
  EXPECT_GE(checked, 10);
}

TEST(Document, TokensNgramsAndLabels) {
  std::istringstream in("__label__x a b c\n__label__y d\n");
  tc::CorpusConfig cfg;
  cfg.bucket = 100;
  const auto v = tc::Vocab::build(in, cfg);
  const auto doc = tc::make_document("__label__y a zzz c", v, cfg);
  EXPECT_EQ(doc.label(), 1);
  EXPECT_EQ(doc.token_ids, (std::vector<std::int32_t>{0, 2}));
  EXPECT_EQ(doc.raw_tokens, 3u);
  // n-grams run over every token, OOV included: (a zzz), (zzz c)
  ASSERT_EQ(doc.ngram_ids.size(), 2u);
  for (auto id : doc.ngram_ids) {
    EXPECT_GE(id, v.n_words());
    EXPECT_LT(id, v.n_words() + 100);
  }
  EXPECT_EQ(doc.rows().size(), 4u);

  const auto unknown = tc::make_document("__label__zzz a", v, cfg);
  EXPECT_TRUE(unknown.unknown_label);
  EXPECT_EQ(unknown.label(), -1);

  const auto multi = tc::make_document("__label__y __label__x a", v, cfg);
  EXPECT_EQ(multi.label(), 1);
  EXPECT_EQ(multi.label_ids.size(), 2u);
}

TEST(Document, DeterministicStreams) {
  const std::string corpus = "__label__1 the cat sat\n__label__2 a dog ran far\n__label__1 the dog sat\n";
  tc::CorpusConfig cfg;
  cfg.word_ngrams = 3;
  cfg.bucket = 1000;
  std::istringstream a(corpus), b(corpus);
  const auto va = tc::Vocab::build(a, cfg);
  const auto vb = tc::Vocab::build(b, cfg);
  EXPECT_EQ(va, vb);
  std::istringstream da(corpus), db(corpus);
  EXPECT_EQ(tc::read_documents(da, va, cfg, tc::ParseMode::kTrain), tc::read_documents(db, vb, cfg, tc::ParseMode::kTrain));
}

TEST(Document, TrainingModeRequiresKnownLabel) {
  std::istringstream in("__label__1 a\n");
  const auto v = tc::Vocab::build(in, {});
  std::istringstream docs("__label__1 a\nb c\n");
  EXPECT_THROW(tc::read_documents(docs, v, {}, tc::ParseMode::kTrain), hypertext::NoLabel);
  std::istringstream docs2("__label__1 a\nb c\n");
  EXPECT_EQ(tc::read_documents(docs2, v, {}, tc::ParseMode::kPredict).size(), 2u);
}
