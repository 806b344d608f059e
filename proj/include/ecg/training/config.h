#ifndef ECG_TRAINING_CONFIG_H_
#define ECG_TRAINING_CONFIG_H_

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace ecg {

struct TrainConfig {
  std::uint64_t seed = 0;

  // Model.
  std::size_t layers = 2;
  std::size_t heads = 4;
  std::size_t d = 64;
  std::size_t max_len = 128;
  std::size_t t = 8;

  // Synthetic data.
  std::size_t n_facts = 32;
  std::size_t n_distractors = 96;
  std::size_t max_negatives = 8;
  std::size_t min_negatives = 2;
  std::size_t chunk_words = 20;
  // Facts whose QA pairs stay out of every QA training set; their passages
  // remain in the corpus.
  double held_out_fraction = 0.25;

  // Self-supervised stage.
  std::size_t ssl_steps = 1500;
  std::size_t ssl_batch = 8;
  std::size_t n_min = 0;  // 0 means max(1, t/2)
  std::size_t n_max = 0;  // 0 means t

  // RAG stage.
  std::size_t rag_steps = 600;
  std::size_t rag_batch = 4;
  std::size_t hard_negatives = 2;
  std::size_t max_gen_docs = 3;
  double tau_neg = 0.15;

  // Teacher reader and parametric baseline.
  std::size_t teacher_steps = 600;
  std::size_t teacher_batch = 4;

  // Optimizer.
  double lr = 3e-3;
  double weight_decay = 0.01;
  double warmup_ratio = 0.05;
  double clip_norm = 1.0;

  // Ablations.
  bool contrastive_pretrain = true;
  bool distillation = true;
  bool loss_scaling = true;
  bool weighted_negatives = true;

  // Evaluation.
  std::size_t budget_min = 4;
  std::size_t budget_max = 32;
  std::size_t budget_step = 4;
  std::size_t pool_top_n = 10;
  std::size_t max_new = 4;

  std::size_t threads = 1;

  std::size_t ssl_n_min() const;
  std::size_t ssl_n_max() const;
  void validate() const;
};

// Sets one field from "key=value". Unknown keys and bad values throw.
void apply_override(TrainConfig& config, std::string_view assignment);
// Plain-text key=value lines; '#' starts a comment.
TrainConfig load_config(const std::string& path, TrainConfig base = {});
TrainConfig parse_config(std::string_view text, TrainConfig base = {});
// Canonical key=value listing of every field, one per line.
std::string config_to_string(const TrainConfig& config);
// FNV-1a 64 of the canonical listing, as 16 hex digits.
std::string config_hash(const TrainConfig& config);
std::vector<std::string> config_keys();

}  // namespace ecg

#endif  // ECG_TRAINING_CONFIG_H_
