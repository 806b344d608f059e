#include "ecg/training/ssl.h"

#include <algorithm>
#include <iostream>
#include <numeric>

#include "ecg/common/error.h"
#include "ecg/lm/prompts.h"
#include "ecg/numerics/ops.h"
#include "ecg/retrieval/maxsim.h"
#include "ecg/training/losses.h"

namespace ecg {
namespace {

std::string join(const std::vector<std::string>& words, std::size_t begin, std::size_t end) {
  std::string out;
  for (std::size_t i = begin; i < end; ++i) {
    if (i > begin) out += ' ';
    out += words[i];
  }
  return out;
}

MixedInput compressed_prompt(Var e_comp) {
  MixedInput input;
  input.add_token(Vocabulary::kEmbStart).add_vectors(e_comp).add_token(Vocabulary::kEmbStop);
  return input;
}

}  // namespace

std::pair<std::string, std::string> split_halves(const std::string& text) {
  const std::vector<std::string> words = split_words(text);
  const std::size_t half = words.size() / 2;
  return {join(words, 0, half), join(words, half, words.size())};
}

std::optional<SslPair> make_ssl_pair(const Passage& passage, std::mt19937_64& rng, std::size_t n_min,
                                     std::size_t n_max) {
  if (n_min == 0 || n_min > n_max) throw ContractError("make_ssl_pair: need 1 <= n_min <= n_max");
  if (split_words(passage.text).size() < 2) return std::nullopt;
  auto [first, second] = split_halves(passage.text);
  std::bernoulli_distribution coin(0.5);
  std::uniform_int_distribution<std::size_t> count(n_min, n_max);
  SslPair pair;
  if (coin(rng)) {
    pair.strategy = SslStrategy::kReconstruction;
    pair.context = coin(rng) ? first : second;
    pair.target = pair.context;
  } else {
    pair.strategy = SslStrategy::kNeighboring;
    pair.context = std::move(first);
    pair.target = std::move(second);
  }
  pair.n_ctx = count(rng);
  pair.n_tgt = count(rng);
  return pair;
}

Var ssl_generation_logits(Graph& g, const EcgModel& model, Var e_comp, std::span<const TokenId> target) {
  ForcedSequence seq = teacher_force(compressed_prompt(e_comp), target);
  Var hidden = model.lm().forward(g, seq.input);
  return model.lm().logits(g, select_rows(hidden, seq.rows));
}

SslLosses ssl_loss(Graph& g, const EcgModel& model, std::span<const SslPair> batch, bool contrastive) {
  if (batch.empty()) throw ContractError("ssl_loss: empty batch");
  std::vector<Var> ctx_ret, tgt_ret, lm_terms;
  std::vector<std::size_t> ctx_rows, tgt_rows;
  for (const SslPair& pair : batch) {
    Var c = model.encode_ret(g, pair.context, pair.n_ctx);
    Var t = model.encode_ret(g, pair.target, pair.n_tgt);
    const std::vector<TokenId> ctx_tokens = model.vocab().tokenize(pair.context);
    const std::vector<TokenId> tgt_tokens = model.vocab().tokenize(pair.target);
    Var forward = lm_loss(ssl_generation_logits(g, model, model.compress(g, c), tgt_tokens), tgt_tokens);
    Var backward = lm_loss(ssl_generation_logits(g, model, model.compress(g, t), ctx_tokens), ctx_tokens);
    lm_terms.push_back(reshape(scale(add(forward, backward), 0.5), Shape{1, 1}));
    ctx_ret.push_back(c);
    tgt_ret.push_back(t);
    ctx_rows.push_back(pair.n_ctx);
    tgt_rows.push_back(pair.n_tgt);
  }
  SslLosses out;
  out.lm = mean(lm_terms.size() == 1 ? lm_terms[0] : concat_cols(lm_terms));
  out.total = out.lm;
  if (contrastive) {
    Var q = ctx_ret.size() == 1 ? ctx_ret[0] : concat_rows(ctx_ret);
    Var d = tgt_ret.size() == 1 ? tgt_ret[0] : concat_rows(tgt_ret);
    Var sim = maxsim_matrix(q, ctx_rows, d, tgt_rows);
    std::vector<std::size_t> diagonal(batch.size());
    std::iota(diagonal.begin(), diagonal.end(), 0);
    out.contrastive = infonce(sim, diagonal, model.scaling().tau(g));
    out.total = add(out.lm, out.contrastive);
  }
  return out;
}

SslReport ssl_step(EcgModel& model, std::span<const SslPair> batch, AdamW& optimizer, bool contrastive) {
  Graph g;
  const SslLosses losses = ssl_loss(g, model, batch, contrastive);
  g.backward(losses.total);
  optimizer.step();
  SslReport report;
  report.lm = losses.lm.value().item();
  report.contrastive_enabled = contrastive;
  report.contrastive = contrastive ? losses.contrastive.value().item() : 0.0;
  report.total = losses.total.value().item();
  return report;
}

std::vector<SslReport> train_ssl(EcgModel& model, const std::vector<Passage>& passages, const TrainConfig& config,
                                 std::mt19937_64& rng, const StepCallback& log) {
  std::vector<const Passage*> usable;
  for (const Passage& p : passages) {
    if (p.token_count >= 2) {
      usable.push_back(&p);
    } else if (log) {
      log(0, "warning: skipping passage " + std::to_string(p.id) + " with fewer than two words");
    }
  }
  if (usable.empty()) throw ContractError("train_ssl: no passage has two or more words");
  AdamW optimizer(model.parameters(),
                  AdamWOptions{.lr = config.lr,
                               .weight_decay = config.weight_decay,
                               .warmup_ratio = config.warmup_ratio,
                               .clip_norm = config.clip_norm},
                  config.ssl_steps);
  std::vector<SslReport> history;
  std::vector<std::size_t> order(usable.size());
  std::iota(order.begin(), order.end(), 0);
  std::size_t cursor = order.size();
  const std::size_t batch_size = std::min(config.ssl_batch, usable.size());
  for (std::size_t step = 0; step < config.ssl_steps; ++step) {
    std::vector<SslPair> batch;
    while (batch.size() < batch_size) {
      if (cursor == order.size()) {
        std::shuffle(order.begin(), order.end(), rng);
        cursor = 0;
      }
      if (auto pair = make_ssl_pair(*usable[order[cursor++]], rng, config.ssl_n_min(), config.ssl_n_max())) {
        batch.push_back(std::move(*pair));
      }
    }
    history.push_back(ssl_step(model, batch, optimizer, config.contrastive_pretrain));
    if (log && (step % 50 == 0 || step + 1 == config.ssl_steps)) {
      const SslReport& r = history.back();
      log(step, "ssl step " + std::to_string(step) + " lm=" + std::to_string(r.lm) +
                    " contrastive=" + std::to_string(r.contrastive) + " tau=" +
                    std::to_string(model.scaling().tau_value()));
    }
  }
  return history;
}

std::vector<SslPair> reconstruction_pairs(const std::vector<Passage>& passages, std::size_t n) {
  std::vector<SslPair> out;
  for (const Passage& p : passages) {
    if (p.token_count < 2) continue;
    auto [first, second] = split_halves(p.text);
    for (std::string* half : {&first, &second}) {
      out.push_back(SslPair{*half, *half, SslStrategy::kReconstruction, n, n});
    }
  }
  return out;
}

std::vector<SslPair> neighbor_pairs(const std::vector<Passage>& passages, std::size_t n) {
  std::vector<SslPair> out;
  for (const Passage& p : passages) {
    if (p.token_count < 2) continue;
    auto [first, second] = split_halves(p.text);
    out.push_back(SslPair{std::move(first), std::move(second), SslStrategy::kNeighboring, n, n});
  }
  return out;
}

double reconstruction_accuracy(const EcgModel& model, std::span<const SslPair> pairs) {
  std::size_t correct = 0, total = 0;
  for (const SslPair& pair : pairs) {
    Graph g(false);
    const std::vector<TokenId> target = model.vocab().tokenize(pair.target);
    Var e_comp = model.compress(g, model.encode_ret(g, pair.context, pair.n_ctx));
    const Tensor logits = ssl_generation_logits(g, model, e_comp, target).value();
    for (std::size_t r = 0; r < target.size(); ++r) {
      std::size_t best = 0;
      for (std::size_t v = 1; v < logits.cols(); ++v) {
        if (logits.at(r, v) > logits.at(r, best)) best = v;
      }
      correct += best == target[r];
      ++total;
    }
  }
  return total == 0 ? 0.0 : static_cast<double>(correct) / static_cast<double>(total);
}

PairRecall pair_recall(const EcgModel& model, std::span<const SslPair> pairs) {
  std::vector<MultiVectorEmbedding> ctx, tgt;
  for (const SslPair& pair : pairs) {
    ctx.push_back(model.embed(pair.context, pair.n_ctx));
    tgt.push_back(model.embed(pair.target, pair.n_tgt));
  }
  auto recall = [](const std::vector<MultiVectorEmbedding>& queries, const std::vector<MultiVectorEmbedding>& docs) {
    std::size_t hits = 0;
    for (std::size_t i = 0; i < queries.size(); ++i) {
      const double own = maxsim(queries[i], docs[i]);
      bool top = true;
      for (std::size_t j = 0; j < docs.size() && top; ++j) {
        if (j != i && maxsim(queries[i], docs[j]) >= own) top = false;
      }
      hits += top;
    }
    return queries.empty() ? 0.0 : static_cast<double>(hits) / static_cast<double>(queries.size());
  };
  return PairRecall{recall(ctx, tgt), recall(tgt, ctx)};
}

}  // namespace ecg
