#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "ecg/common/error.h"
#include "ecg/lm/generation.h"
#include "ecg/lm/model.h"
#include "ecg/lm/prompts.h"
#include "ecg/lm/vocabulary.h"
#include "ecg/numerics/ops.h"
#include "ecg/numerics/optimizer.h"

namespace ecg {
namespace {

Vocabulary small_vocab() {
  const std::vector<std::string> texts = {
      "capital of atlantis is coral", "what is the capital of atlantis",
      std::string(kEncodePrompt), parametric_prompt("q"), "Generate a response to the following question using the embedded context. Context: Response:"};
  return Vocabulary::build(texts);
}

LanguageModel small_model(const Vocabulary& vocab, std::uint64_t seed = 1, std::size_t d = 16) {
  LmConfig cfg;
  cfg.layers = 2;
  cfg.heads = 2;
  cfg.d = d;
  cfg.vocab = vocab.size();
  cfg.max_len = 64;
  return LanguageModel(cfg, seed);
}

Tensor run_logits(const LanguageModel& model, const MixedInput& input) {
  Graph g(false);
  return model.logits(g, model.forward(g, input)).value();
}

TEST(Vocabulary, SpecialsComeFirst) {
  const Vocabulary v = small_vocab();
  EXPECT_EQ(v.token(Vocabulary::kEos), "<eos>");
  EXPECT_EQ(v.token(Vocabulary::kEmbStart), "<emb_start>");
  EXPECT_EQ(v.token(Vocabulary::kEmb), "<emb>");
  EXPECT_EQ(v.token(Vocabulary::kEmbStop), "<emb_stop>");
  for (std::size_t i = Vocabulary::kNumSpecial + 1; i < v.size(); ++i) {
    EXPECT_LT(v.tokens()[i - 1], v.tokens()[i]);
  }
}

TEST(Vocabulary, EmptyText) {
  EXPECT_TRUE(small_vocab().tokenize("").empty());
}

TEST(Vocabulary, KnownWordsRoundTrip) {
  const Vocabulary v = small_vocab();
  const auto ids = v.tokenize("capital of atlantis");
  ASSERT_EQ(ids.size(), 3u);
  EXPECT_EQ(v.detokenize(ids), "capital of atlantis");
}

TEST(Vocabulary, CharacterFallbackRoundTrips) {
  const Vocabulary v = small_vocab();
  const auto ids = v.tokenize("lotus");
  EXPECT_GT(ids.size(), 1u);
  EXPECT_EQ(v.detokenize(ids), "lotus");
}

TEST(Vocabulary, UnseenSymbolMapsToUnk) {
  const Vocabulary v = small_vocab();
  const auto ids = v.tokenize("coral @");
  ASSERT_EQ(ids.size(), 2u);
  EXPECT_EQ(ids[1], Vocabulary::kUnk);
  EXPECT_NE(v.detokenize(ids).find("<unk>"), std::string::npos);
}

TEST(Vocabulary, SaveLoadRoundTrip) {
  const Vocabulary v = small_vocab();
  const std::string path = ::testing::TempDir() + "/vocab.txt";
  v.save(path);
  EXPECT_EQ(Vocabulary::load(path).tokens(), v.tokens());
}

TEST(MixedInput, RejectsUnwrappedVectors) {
  MixedInput in;
  in.add_token(7).add_vectors(Tensor(Shape{1, 4}));
  EXPECT_THROW(in.validate(), ContractError);
}

TEST(Forward, AllPadIsFinite) {
  const Vocabulary v = small_vocab();
  const LanguageModel model = small_model(v);
  MixedInput in;
  in.add_tokens(std::vector<TokenId>(10, Vocabulary::kPad));
  for (double x : run_logits(model, in).data()) EXPECT_TRUE(std::isfinite(x));
}

TEST(Forward, Deterministic) {
  const Vocabulary v = small_vocab();
  const LanguageModel model = small_model(v);
  MixedInput in;
  in.add_tokens(v.tokenize("what is the capital of atlantis"));
  EXPECT_EQ(run_logits(model, in), run_logits(model, in));
}

TEST(Forward, OverlongInputThrows) {
  const Vocabulary v = small_vocab();
  const LanguageModel model = small_model(v);
  MixedInput in;
  in.add_tokens(std::vector<TokenId>(65, 8));
  Graph g(false);
  EXPECT_THROW(model.forward(g, in), LengthError);
}

TEST(Forward, InjectingOwnEmbeddingRowIsBitExact) {
  const Vocabulary v = small_vocab();
  const LanguageModel model = small_model(v);
  const auto ids = v.tokenize("capital of atlantis");
  MixedInput tokens;
  tokens.add_tokens(ids).add_token(Vocabulary::kEmbStart).add_token(ids[1]).add_token(Vocabulary::kEmbStop);
  MixedInput injected;
  Tensor row(Shape{1, model.config().d});
  for (std::size_t c = 0; c < model.config().d; ++c) row[c] = model.embedding_table().at(ids[1], c);
  injected.add_tokens(ids).add_token(Vocabulary::kEmbStart).add_vectors(row).add_token(Vocabulary::kEmbStop);
  EXPECT_EQ(run_logits(model, tokens), run_logits(model, injected));
}

TEST(Forward, Causal) {
  const Vocabulary v = small_vocab();
  const LanguageModel model = small_model(v);
  std::vector<TokenId> ids = v.tokenize("what is the capital of atlantis");
  MixedInput a;
  a.add_tokens(ids);
  const Tensor base = run_logits(model, a);
  for (std::size_t j = 0; j < ids.size(); ++j) {
    std::vector<TokenId> changed = ids;
    changed[j] = Vocabulary::kUnk;
    MixedInput b;
    b.add_tokens(changed);
    const Tensor other = run_logits(model, b);
    for (std::size_t r = 0; r < j; ++r) {
      for (std::size_t c = 0; c < base.cols(); ++c) ASSERT_EQ(base.at(r, c), other.at(r, c));
    }
  }
}

TEST(Encode, ShapeAndCountContract) {
  const Vocabulary v = small_vocab();
  const LanguageModel model = small_model(v);
  for (std::size_t n = 1; n <= 32; ++n) {
    Graph g(false);
    const Tensor e = encode_text(g, model, v, "capital of atlantis", n).value();
    ASSERT_EQ(e.shape(), (Shape{n, model.config().d}));
  }
  EXPECT_THROW(encoding_input(v, "x", 0), ContractError);
}

TEST(Encode, DeterministicAndTextDependent) {
  const Vocabulary v = small_vocab();
  const LanguageModel model = small_model(v);
  Graph g(false);
  const Tensor a = encode_text(g, model, v, "capital of atlantis", 4).value();
  const Tensor b = encode_text(g, model, v, "capital of atlantis", 4).value();
  const Tensor c = encode_text(g, model, v, "what is coral", 4).value();
  EXPECT_EQ(a, b);
  EXPECT_NE(a, c);
}

TEST(Encode, EmbPositionsFollowText) {
  const Vocabulary v = small_vocab();
  const MixedInput in = encoding_input(v, "capital of atlantis", 3);
  const auto& ids = std::get<std::vector<TokenId>>(in.segments()[0]);
  const std::size_t off = encoding_emb_offset(v, "capital of atlantis");
  EXPECT_EQ(ids[off - 1], Vocabulary::kEmbStart);
  EXPECT_EQ(ids[off], Vocabulary::kEmb);
  EXPECT_EQ(ids[off + 2], Vocabulary::kEmb);
  EXPECT_EQ(ids[off + 3], Vocabulary::kEmbStop);
  EXPECT_EQ(ids.size(), off + 4);
}

TEST(GenInput, NoContextsIsParametricPrompt) {
  const Vocabulary v = small_vocab();
  const MixedInput in = build_gen_input(v, "what is the capital of atlantis", std::span<const Tensor>{});
  ASSERT_EQ(in.segments().size(), 1u);
  EXPECT_EQ(std::get<std::vector<TokenId>>(in.segments()[0]),
            v.tokenize(parametric_prompt("what is the capital of atlantis")));
}

TEST(GenInput, OneContextWrapsItsVectors) {
  const Vocabulary v = small_vocab();
  const Tensor ctx(Shape{3, 16}, 0.5);
  const MixedInput in = build_gen_input(v, "what", std::span<const Tensor>(&ctx, 1));
  in.validate();
  EXPECT_EQ(in.vector_count(), 3u);
  ASSERT_EQ(in.segments().size(), 3u);
  EXPECT_EQ(std::get<std::vector<TokenId>>(in.segments()[0]).back(), Vocabulary::kEmbStart);
  EXPECT_EQ(std::get<std::vector<TokenId>>(in.segments()[2]).front(), Vocabulary::kEmbStop);
}

TEST(GenInput, TwoContextsKeepOrder) {
  const Vocabulary v = small_vocab();
  const Tensor ctx[] = {Tensor(Shape{2, 16}, 1.0), Tensor(Shape{1, 16}, 2.0)};
  const MixedInput in = build_gen_input(v, "what", ctx);
  in.validate();
  ASSERT_EQ(in.segments().size(), 5u);
  EXPECT_EQ(std::get<Tensor>(in.segments()[1]), ctx[0]);
  EXPECT_EQ(std::get<Tensor>(in.segments()[3]), ctx[1]);
  const auto& between = std::get<std::vector<TokenId>>(in.segments()[2]);
  EXPECT_EQ(between, (std::vector<TokenId>{Vocabulary::kEmbStop, Vocabulary::kEmbStart}));
  const auto mask = in.injected_mask();
  EXPECT_EQ(std::count(mask.begin(), mask.end(), true), 3);
}

TEST(Prompts, ReaderTemplate) {
  const std::string ctx[] = {"doc one", "doc two"};
  EXPECT_EQ(reader_prompt("q?", ctx),
            "Generate a response to the following question using the context.\n\nQuestion: q?\n\n"
            "Context: doc one\n\ndoc two\n\nResponse:");
  EXPECT_EQ(reader_prompt("q?", {}), parametric_prompt("q?"));
  EXPECT_EQ(parametric_prompt("q?"), "Generate a response to the following question.\n\nQuestion: q?\n\nResponse:");
}

TEST(Generate, UniformLogitsEmitEos) {
  const Vocabulary v = small_vocab();
  LanguageModel model = small_model(v);
  model.params().find("lm.tok_emb")->value.fill(0.0);
  MixedInput in;
  in.add_tokens(v.tokenize("what is"));
  EXPECT_EQ(generate(model, in, 5), (std::vector<TokenId>{Vocabulary::kEos}));
}

TEST(Generate, MaxNewOne) {
  const Vocabulary v = small_vocab();
  const LanguageModel model = small_model(v);
  MixedInput in;
  in.add_tokens(v.tokenize("what is"));
  EXPECT_EQ(generate(model, in, 1).size(), 1u);
}

TEST(Generate, MemorizesPairAfterOverfitting) {
  const Vocabulary v = small_vocab();
  LanguageModel model = small_model(v, 3, 32);
  const std::vector<TokenId> prompt = v.tokenize(parametric_prompt("what is the capital of atlantis"));
  std::vector<TokenId> answer = v.tokenize("coral");
  answer.push_back(Vocabulary::kEos);
  MixedInput train;
  train.add_tokens(prompt).add_tokens(std::span<const TokenId>(answer.data(), answer.size() - 1));
  std::vector<std::size_t> rows, targets;
  for (std::size_t i = 0; i < answer.size(); ++i) {
    rows.push_back(prompt.size() - 1 + i);
    targets.push_back(answer[i]);
  }
  AdamW opt(model.params().all(), AdamWOptions{.lr = 1e-2}, 150);
  for (int step = 0; step < 150; ++step) {
    Graph g;
    Var logits = model.logits(g, select_rows(model.forward(g, train), rows));
    g.backward(scale(mean(pick(log_softmax(logits), targets)), -1.0));
    opt.step();
  }
  MixedInput in;
  in.add_tokens(prompt);
  EXPECT_EQ(generate(model, in, 4), answer);
  EXPECT_EQ(generate_text(model, v, in, 4), "coral");
}

}  // namespace
}  // namespace ecg
