#ifndef ECG_TRAINING_READER_H_
#define ECG_TRAINING_READER_H_

#include <random>
#include <vector>

#include "ecg/data/corpus.h"
#include "ecg/lm/model.h"
#include "ecg/lm/vocabulary.h"
#include "ecg/training/config.h"
#include "ecg/training/rag.h"

namespace ecg {

enum class ReaderMode {
  kReader,      // question plus 1..max_gen_docs raw documents, positive included
  kParametric,  // question only
};

// Next-token training of a plain LM on answer tokens, config.teacher_steps
// updates of config.teacher_batch examples.
std::vector<double> train_reader(LanguageModel& model, const Vocabulary& vocab,
                                 const std::vector<TrainExample>& examples, const TrainConfig& config,
                                 ReaderMode mode, std::mt19937_64& rng, const StepCallback& log = {});

// Prompt the reader sees for one sampled item.
MixedInput reader_training_prompt(const Vocabulary& vocab, const RagItem& item, ReaderMode mode);

}  // namespace ecg

#endif  // ECG_TRAINING_READER_H_
