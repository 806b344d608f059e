#include "ecg/training/rag.h"

#include <algorithm>
#include <numeric>
#include <unordered_map>

#include "ecg/common/error.h"
#include "ecg/lm/prompts.h"
#include "ecg/numerics/ops.h"
#include "ecg/retrieval/maxsim.h"
#include "ecg/training/losses.h"

namespace ecg {

RagItem make_rag_item(const TrainExample& example, const TrainConfig& config, std::mt19937_64& rng) {
  if (example.answers.empty()) throw ContractError("rag: example without answers: " + example.question);
  if (example.negatives.size() < config.hard_negatives) {
    throw ContractError("rag: example has " + std::to_string(example.negatives.size()) +
                        " negatives, need " + std::to_string(config.hard_negatives));
  }
  std::vector<double> scores;
  for (const ScoredPassage& n : example.negatives) scores.push_back(n.score);
  const std::vector<std::size_t> picked =
      sample_negatives(scores, config.tau_neg, config.hard_negatives, rng, config.weighted_negatives);

  RagItem item;
  item.example = &example;
  item.docs.push_back(&example.positive);
  item.teacher_scores.push_back(example.positive_score);
  for (std::size_t i : picked) {
    item.docs.push_back(&example.negatives[i].passage);
    item.teacher_scores.push_back(example.negatives[i].score);
  }

  const std::size_t max_k = std::min(config.max_gen_docs, item.docs.size());
  const std::size_t k = std::uniform_int_distribution<std::size_t>(1, max_k)(rng);
  std::vector<std::size_t> others(item.docs.size() - 1);
  std::iota(others.begin(), others.end(), 1);
  std::shuffle(others.begin(), others.end(), rng);
  item.gen_docs.push_back(0);
  item.gen_docs.insert(item.gen_docs.end(), others.begin(), others.begin() + static_cast<std::ptrdiff_t>(k - 1));
  std::shuffle(item.gen_docs.begin(), item.gen_docs.end(), rng);
  return item;
}

RagLosses rag_loss(Graph& g, const EcgModel& model, const LanguageModel* teacher, std::span<const RagItem> batch,
                   const TrainConfig& config) {
  if (batch.empty()) throw ContractError("rag_loss: empty batch");
  if (config.distillation && teacher == nullptr) throw ContractError("rag_loss: distillation needs a teacher");
  const std::size_t t = config.t;
  const Vocabulary& vocab = model.vocab();

  // Encode every distinct document once, in first-appearance order.
  std::unordered_map<std::uint32_t, std::size_t> column;
  std::vector<Var> doc_ret;
  std::vector<std::vector<std::size_t>> item_cols;
  for (const RagItem& item : batch) {
    std::vector<std::size_t> cols;
    for (const Passage* p : item.docs) {
      auto [it, inserted] = column.emplace(p->id, doc_ret.size());
      if (inserted) doc_ret.push_back(model.encode_ret(g, p->text, t));
      cols.push_back(it->second);
    }
    item_cols.push_back(std::move(cols));
  }
  std::vector<Var> query_ret;
  for (const RagItem& item : batch) query_ret.push_back(model.encode_ret(g, item.example->question, t));

  const std::vector<std::size_t> q_rows(query_ret.size(), t);
  const std::vector<std::size_t> d_rows(doc_ret.size(), t);
  Var sim = maxsim_matrix(query_ret.size() == 1 ? query_ret[0] : concat_rows(query_ret), q_rows,
                          doc_ret.size() == 1 ? doc_ret[0] : concat_rows(doc_ret), d_rows);

  RagLosses out;
  std::vector<std::size_t> positives;
  for (const auto& cols : item_cols) positives.push_back(cols[0]);
  out.contrastive = infonce(sim, positives, model.scaling().tau(g));

  Var alpha = model.scaling().alpha(g);
  std::vector<Var> margins, gens;
  for (std::size_t b = 0; b < batch.size(); ++b) {
    const RagItem& item = batch[b];
    const std::vector<std::size_t>& cols = item_cols[b];
    std::vector<Var> own;
    for (std::size_t c : cols) own.push_back(slice_cols(slice_rows(sim, b, b + 1), c, c + 1));
    std::vector<std::size_t> hard(cols.size() - 1);
    std::iota(hard.begin(), hard.end(), 1);
    margins.push_back(
        reshape(margin_mse(concat_cols(own), item.teacher_scores, 0, hard, alpha), Shape{1, 1}));

    std::vector<Var> contexts;
    std::vector<std::vector<TokenId>> raw;
    for (std::size_t i : item.gen_docs) {
      contexts.push_back(model.compress(g, doc_ret[cols[i]]));
      raw.push_back(vocab.tokenize(item.docs[i]->text));
    }
    const std::vector<TokenId> target = answer_tokens(vocab, item.example->answers.front());
    ForcedSequence student = teacher_force(build_gen_input(vocab, item.example->question, contexts), target);
    Var logits = model.lm().logits(g, select_rows(model.lm().forward(g, student.input), student.rows));
    if (config.distillation) {
      Graph frozen(false);
      ForcedSequence reader = teacher_force(reader_input(vocab, item.example->question, raw), target);
      Var t_logits = teacher->logits(frozen, select_rows(teacher->forward(frozen, reader.input), reader.rows));
      gens.push_back(reshape(kl_distill(logits, t_logits.value()), Shape{1, 1}));
    } else {
      gens.push_back(reshape(lm_loss(logits, target), Shape{1, 1}));
    }
  }
  out.margin = mean(margins.size() == 1 ? margins[0] : concat_cols(margins));
  out.gen = mean(gens.size() == 1 ? gens[0] : concat_cols(gens));
  out.total = add(add(out.gen, out.contrastive), out.margin);
  return out;
}

RagReport rag_step(EcgModel& model, const LanguageModel* teacher, std::span<const RagItem> batch, AdamW& optimizer,
                   const TrainConfig& config) {
  Graph g;
  const RagLosses losses = rag_loss(g, model, teacher, batch, config);
  g.backward(losses.total);
  optimizer.step();
  RagReport report;
  report.gen = losses.gen.value().item();
  report.contrastive = losses.contrastive.value().item();
  report.margin = losses.margin.value().item();
  report.total = losses.total.value().item();
  report.tau = model.scaling().tau_value();
  report.alpha = model.scaling().alpha_value();
  return report;
}

std::vector<RagReport> train_rag(EcgModel& model, const LanguageModel* teacher,
                                 const std::vector<TrainExample>& examples, const TrainConfig& config,
                                 std::mt19937_64& rng, const StepCallback& log) {
  if (examples.empty()) throw ContractError("train_rag: no training examples");
  if (!config.loss_scaling) model.scaling().set_enabled(false);
  AdamW optimizer(model.parameters(),
                  AdamWOptions{.lr = config.lr,
                               .weight_decay = config.weight_decay,
                               .warmup_ratio = config.warmup_ratio,
                               .clip_norm = config.clip_norm},
                  config.rag_steps);
  std::vector<std::size_t> order(examples.size());
  std::iota(order.begin(), order.end(), 0);
  std::size_t cursor = order.size();
  const std::size_t batch_size = std::min(config.rag_batch, examples.size());
  std::vector<RagReport> history;
  for (std::size_t step = 0; step < config.rag_steps; ++step) {
    std::vector<RagItem> batch;
    while (batch.size() < batch_size) {
      if (cursor == order.size()) {
        std::shuffle(order.begin(), order.end(), rng);
        cursor = 0;
      }
      batch.push_back(make_rag_item(examples[order[cursor++]], config, rng));
    }
    history.push_back(rag_step(model, teacher, batch, optimizer, config));
    if (log && (step % 50 == 0 || step + 1 == config.rag_steps)) {
      const RagReport& r = history.back();
      log(step, "rag step " + std::to_string(step) + " gen=" + std::to_string(r.gen) +
                    " contrastive=" + std::to_string(r.contrastive) + " margin=" + std::to_string(r.margin) +
                    " tau=" + std::to_string(r.tau) + " alpha=" + std::to_string(r.alpha));
    }
  }
  return history;
}

}  // namespace ecg
