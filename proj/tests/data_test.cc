#include <fstream>
#include <set>

#include <gtest/gtest.h>

#include "ecg/common/error.h"
#include "ecg/data/corpus.h"
#include "ecg/data/synthetic.h"

namespace ecg {
namespace {

std::string words(std::size_t n) {
  std::string s;
  for (std::size_t i = 0; i < n; ++i) s += "w" + std::to_string(i) + (i + 1 < n ? " " : "");
  return s;
}

bool contains_word(const std::string& text, const std::string& word) {
  const auto ws = split_words(text);
  return std::find(ws.begin(), ws.end(), word) != ws.end();
}

TEST(Chunk, EvenSplit) {
  const auto chunks = chunk_text(words(40), 20);
  ASSERT_EQ(chunks.size(), 2u);
  EXPECT_EQ(chunks[0].token_count, 20u);
  EXPECT_EQ(chunks[1].token_count, 20u);
  EXPECT_EQ(chunks[0].id, 0u);
  EXPECT_EQ(chunks[1].id, 1u);
}

TEST(Chunk, Remainder) {
  const auto chunks = chunk_text(words(45), 20, 10);
  ASSERT_EQ(chunks.size(), 3u);
  EXPECT_EQ(chunks[2].token_count, 5u);
  EXPECT_EQ(chunks[2].id, 12u);
}

TEST(Chunk, IdempotentOnSmallChunks) {
  for (const Passage& p : chunk_text(words(45), 20)) {
    const auto again = chunk_text(p.text, 20);
    ASSERT_EQ(again.size(), 1u);
    EXPECT_EQ(again[0].text, p.text);
  }
}

TEST(Chunk, PreservesWordSequence) {
  const std::string doc = "  alpha beta\tgamma\n delta epsilon zeta eta  theta iota ";
  std::vector<std::string> joined;
  for (const Passage& p : chunk_text(doc, 3)) {
    for (auto& w : split_words(p.text)) joined.push_back(w);
  }
  EXPECT_EQ(joined, split_words(doc));
}

TEST(Chunk, EmptyAndBadTarget) {
  EXPECT_TRUE(chunk_text("   ", 20).empty());
  EXPECT_THROW(chunk_text("a b", 1), ContractError);
}

TEST(Synth, Counting) {
  const SyntheticWorld w = synth_corpus(1, 4, 4);
  EXPECT_EQ(w.passages.size(), 8u);
  EXPECT_EQ(w.examples.size(), 4u);
  EXPECT_EQ(w.queries.size(), 4u);
}

TEST(Synth, Deterministic) {
  const std::string a = ::testing::TempDir() + "/a.jsonl", b = ::testing::TempDir() + "/b.jsonl";
  save_corpus(a, synth_corpus(7, 32, 96).passages);
  save_corpus(b, synth_corpus(7, 32, 96).passages);
  std::ifstream fa(a), fb(b);
  const std::string sa((std::istreambuf_iterator<char>(fa)), {}), sb((std::istreambuf_iterator<char>(fb)), {});
  EXPECT_EQ(sa, sb);
  EXPECT_EQ(synth_corpus(7, 32, 96).examples, synth_corpus(7, 32, 96).examples);
  EXPECT_NE(synth_corpus(8, 32, 96).passages, synth_corpus(7, 32, 96).passages);
}

TEST(Synth, GoldUniquenessOverSeeds) {
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    const SyntheticWorld w = synth_corpus(seed, 12, 24);
    std::set<std::uint32_t> ids;
    for (const Passage& p : w.passages) ids.insert(p.id);
    ASSERT_EQ(ids.size(), w.passages.size());
    for (const TrainExample& ex : w.examples) {
      const std::string& answer = ex.answers.at(0);
      std::size_t holders = 0;
      for (const Passage& p : w.passages) holders += contains_word(p.text, answer);
      ASSERT_EQ(holders, 1u) << "seed " << seed;
      ASSERT_TRUE(contains_word(ex.positive.text, answer));
      ASSERT_GE(ex.negatives.size(), 2u);
      for (const ScoredPassage& n : ex.negatives) {
        ASSERT_FALSE(contains_word(n.passage.text, answer));
        ASSERT_LE(n.score, ex.positive_score);
      }
    }
  }
}

TEST(Synth, TemplatesAndScores) {
  const SyntheticWorld w = synth_corpus(3, 4, 8);
  const Fact& f = w.facts[0];
  EXPECT_EQ(w.examples[0].question, "what is the " + f.relation + " of " + f.entity);
  EXPECT_EQ(w.passages[0].text.rfind("the " + f.relation + " of " + f.entity + " is " + f.value + " .", 0), 0u);
  EXPECT_EQ(w.examples[0].positive_score, 2.0);
  EXPECT_EQ(w.queries[0].gold_id, f.gold_id);
  // Distractors about the same entity share one of two content words.
  EXPECT_EQ(w.examples[0].negatives[0].score, 0.5);
  EXPECT_THROW(synth_corpus(1, 3, 3), ContractError);
  EXPECT_THROW(synth_corpus(1, 2000, 0), ContractError);
}

TEST(TeacherScore, OverlapFraction) {
  const Passage p = make_passage(1, "the river of zuba is unknown .");
  EXPECT_EQ(teacher_score("what is the capital of zuba", p, false), 0.5);
  EXPECT_EQ(teacher_score("what is the river of zuba", p, false), 1.0);
  EXPECT_EQ(teacher_score("what is the capital of zuba", p, true), 2.0);
}

TEST(CorpusIo, RoundTrip) {
  const std::string path = ::testing::TempDir() + "/corpus.jsonl";
  std::vector<Passage> passages = {make_passage(3, "caf\xc3\xa9 \"quoted\" text"), make_passage(1, "plain")};
  save_corpus(path, passages);
  EXPECT_EQ(load_corpus(path), passages);
}

TEST(CorpusIo, EmptyFile) {
  const std::string path = ::testing::TempDir() + "/empty.jsonl";
  std::ofstream(path).close();
  EXPECT_TRUE(load_corpus(path).empty());
}

TEST(CorpusIo, DuplicateIdNamesBothLines) {
  const std::string path = ::testing::TempDir() + "/dup.jsonl";
  std::ofstream(path) << "{\"id\": 4, \"text\": \"a\"}\n{\"id\": 5, \"text\": \"b\"}\n{\"id\": 4, \"text\": \"c\"}\n";
  try {
    load_corpus(path);
    FAIL();
  } catch (const FormatError& e) {
    const std::string msg = e.what();
    EXPECT_NE(msg.find("lines 1 and 3"), std::string::npos) << msg;
  }
}

TEST(CorpusIo, MalformedLineNamesLine) {
  const std::string path = ::testing::TempDir() + "/bad.jsonl";
  std::ofstream(path) << "{\"id\": 4, \"text\": \"a\"}\n{\"id\": oops}\n";
  try {
    load_corpus(path);
    FAIL();
  } catch (const FormatError& e) {
    EXPECT_NE(std::string(e.what()).find(":2:"), std::string::npos) << e.what();
  }
}

TEST(TrainIo, RoundTripAndFilters) {
  const SyntheticWorld w = synth_corpus(5, 6, 12);
  const std::string path = ::testing::TempDir() + "/train.jsonl";
  save_train_examples(path, w.examples);
  EXPECT_EQ(load_train_examples(path), w.examples);
  EXPECT_THROW(load_train_examples(path, 100), FormatError);

  std::vector<TrainExample> bad = {w.examples[0]};
  bad[0].negatives[0].score = 3.0;
  save_train_examples(path, bad);
  EXPECT_THROW(load_train_examples(path), FormatError);
}

TEST(QueryIo, RoundTrip) {
  const SyntheticWorld w = synth_corpus(5, 6, 12);
  const std::string path = ::testing::TempDir() + "/queries.jsonl";
  save_eval_queries(path, w.queries);
  EXPECT_EQ(load_eval_queries(path), w.queries);
}

}  // namespace
}  // namespace ecg
