#include "ecg/training/reader.h"

#include <algorithm>
#include <numeric>

#include "ecg/common/error.h"
#include "ecg/lm/prompts.h"
#include "ecg/numerics/ops.h"
#include "ecg/training/losses.h"

namespace ecg {

MixedInput reader_training_prompt(const Vocabulary& vocab, const RagItem& item, ReaderMode mode) {
  std::vector<std::vector<TokenId>> docs;
  if (mode == ReaderMode::kReader) {
    for (std::size_t i : item.gen_docs) docs.push_back(vocab.tokenize(item.docs[i]->text));
  }
  return reader_input(vocab, item.example->question, docs);
}

std::vector<double> train_reader(LanguageModel& model, const Vocabulary& vocab,
                                 const std::vector<TrainExample>& examples, const TrainConfig& config,
                                 ReaderMode mode, std::mt19937_64& rng, const StepCallback& log) {
  if (examples.empty()) throw ContractError("train_reader: no training examples");
  AdamW optimizer(model.params().all(),
                  AdamWOptions{.lr = config.lr,
                               .weight_decay = config.weight_decay,
                               .warmup_ratio = config.warmup_ratio,
                               .clip_norm = config.clip_norm},
                  config.teacher_steps);
  std::vector<std::size_t> order(examples.size());
  std::iota(order.begin(), order.end(), 0);
  std::size_t cursor = order.size();
  const std::size_t batch_size = std::min(config.teacher_batch, examples.size());
  const char* name = mode == ReaderMode::kReader ? "reader" : "parametric";
  std::vector<double> history;
  for (std::size_t step = 0; step < config.teacher_steps; ++step) {
    Graph g;
    std::vector<Var> terms;
    while (terms.size() < batch_size) {
      if (cursor == order.size()) {
        std::shuffle(order.begin(), order.end(), rng);
        cursor = 0;
      }
      const TrainExample& ex = examples[order[cursor++]];
      const RagItem item = make_rag_item(ex, config, rng);
      const std::vector<TokenId> target = answer_tokens(vocab, ex.answers.front());
      ForcedSequence seq = teacher_force(reader_training_prompt(vocab, item, mode), target);
      Var logits = model.logits(g, select_rows(model.forward(g, seq.input), seq.rows));
      terms.push_back(reshape(lm_loss(logits, target), Shape{1, 1}));
    }
    Var loss = mean(terms.size() == 1 ? terms[0] : concat_cols(terms));
    g.backward(loss);
    optimizer.step();
    history.push_back(loss.value().item());
    if (log && (step % 50 == 0 || step + 1 == config.teacher_steps)) {
      log(step, std::string(name) + " step " + std::to_string(step) + " loss=" + std::to_string(history.back()));
    }
  }
  return history;
}

}  // namespace ecg
