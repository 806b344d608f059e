#ifndef ECG_TRAINING_RAG_H_
#define ECG_TRAINING_RAG_H_

#include <random>
#include <span>
#include <vector>

#include "ecg/data/corpus.h"
#include "ecg/numerics/optimizer.h"
#include "ecg/training/config.h"
#include "ecg/training/ecg_model.h"
#include "ecg/training/ssl.h"

namespace ecg {

// One example with its sampled documents. docs[0] is the positive, the rest
// are hard negatives; gen_docs indexes docs in generation order.
struct RagItem {
  const TrainExample* example = nullptr;
  std::vector<const Passage*> docs;
  std::vector<double> teacher_scores;
  std::vector<std::size_t> gen_docs;
};

RagItem make_rag_item(const TrainExample& example, const TrainConfig& config, std::mt19937_64& rng);

struct RagLosses {
  Var total;
  Var gen;
  Var contrastive;
  Var margin;
};

// Joint loss. Every query is scored against all documents of the batch;
// Margin-MSE uses each example's own hard negatives. `teacher` supplies the
// distillation targets and is only read when config.distillation is on.
RagLosses rag_loss(Graph& g, const EcgModel& model, const LanguageModel* teacher, std::span<const RagItem> batch,
                   const TrainConfig& config);

struct RagReport {
  double gen = 0.0;
  double contrastive = 0.0;
  double margin = 0.0;
  double total = 0.0;
  double tau = 0.0;
  double alpha = 0.0;
};

RagReport rag_step(EcgModel& model, const LanguageModel* teacher, std::span<const RagItem> batch, AdamW& optimizer,
                   const TrainConfig& config);

// Runs config.rag_steps updates over shuffled examples. With loss_scaling
// off, tau and alpha are pinned to 1 and frozen first.
std::vector<RagReport> train_rag(EcgModel& model, const LanguageModel* teacher,
                                 const std::vector<TrainExample>& examples, const TrainConfig& config,
                                 std::mt19937_64& rng, const StepCallback& log = {});

}  // namespace ecg

#endif  // ECG_TRAINING_RAG_H_
