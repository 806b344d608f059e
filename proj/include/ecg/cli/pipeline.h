#ifndef ECG_CLI_PIPELINE_H_
#define ECG_CLI_PIPELINE_H_

#include <cstdint>
#include <memory>
#include <string_view>
#include <vector>

#include "ecg/data/corpus.h"
#include "ecg/data/synthetic.h"
#include "ecg/eval/evaluation.h"
#include "ecg/lm/model.h"
#include "ecg/retrieval/bm25.h"
#include "ecg/retrieval/store.h"
#include "ecg/training/config.h"
#include "ecg/training/ecg_model.h"
#include "ecg/training/rag.h"
#include "ecg/training/ssl.h"

namespace ecg {

// Independent seed for one named stochastic stage.
std::uint64_t stream_seed(std::uint64_t seed, std::string_view stream);

// Facts whose QA pairs are trained on, and held-out facts whose passages
// stay indexed but whose questions are never trained on.
struct QaSplit {
  std::vector<TrainExample> train_examples;
  std::vector<EvalQuery> train_queries;
  std::vector<EvalQuery> heldout_queries;
};
QaSplit split_qa(const SyntheticWorld& world, double held_out_fraction, std::uint64_t seed);

Vocabulary build_vocabulary(const std::vector<Passage>& passages, const std::vector<TrainExample>& examples,
                            const std::vector<EvalQuery>& queries);
LmConfig lm_config_for(const TrainConfig& config, const Vocabulary& vocab);
SyntheticWorld synth_world(const TrainConfig& config);

EmbeddingStore build_index(const EcgModel& model, const std::vector<Passage>& passages, std::size_t t,
                           std::size_t threads = 1);
Bm25Index build_bm25(const std::vector<Passage>& passages);

// Fraction of queries whose gold passage ranks first under MaxSim.
double gold_top1_rate(const EcgModel& model, const EmbeddingStore& store, std::span<const EvalQuery> queries);

// The whole desk run in memory: data, readers, both ECG stages, indexes.
struct DeskRun {
  TrainConfig config;
  SyntheticWorld world;
  QaSplit split;
  Vocabulary vocab;
  std::unique_ptr<LanguageModel> reader;
  std::unique_ptr<LanguageModel> parametric;
  std::unique_ptr<EcgModel> ecg;
  std::vector<SslReport> ssl_history;
  std::vector<RagReport> rag_history;
  EmbeddingStore store;
  Bm25Index bm25;

  EvalSystem system() const;
};

DeskRun prepare_desk_run(const TrainConfig& config);
void train_readers(DeskRun& run, const StepCallback& log = {});
void train_ecg(DeskRun& run, const StepCallback& log = {});
void build_indexes(DeskRun& run);
DeskRun run_desk_pipeline(const TrainConfig& config, const StepCallback& log = {});

}  // namespace ecg

#endif  // ECG_CLI_PIPELINE_H_
