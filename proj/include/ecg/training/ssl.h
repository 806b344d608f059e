#ifndef ECG_TRAINING_SSL_H_
#define ECG_TRAINING_SSL_H_

#include <functional>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "ecg/data/corpus.h"
#include "ecg/numerics/optimizer.h"
#include "ecg/training/config.h"
#include "ecg/training/ecg_model.h"

namespace ecg {

enum class SslStrategy { kReconstruction, kNeighboring };

struct SslPair {
  std::string context;
  std::string target;
  SslStrategy strategy = SslStrategy::kNeighboring;
  std::size_t n_ctx = 1;
  std::size_t n_tgt = 1;
};

// Halves of a passage at floor(words/2).
std::pair<std::string, std::string> split_halves(const std::string& text);

// Strategy with probability 1/2 each; emb counts uniform on [n_min, n_max].
// Passages shorter than two words yield nullopt.
std::optional<SslPair> make_ssl_pair(const Passage& passage, std::mt19937_64& rng, std::size_t n_min,
                                     std::size_t n_max);

struct SslLosses {
  Var total;
  Var lm;
  Var contrastive;  // unbound when disabled
};

// Bidirectional generation loss (context->target and target->context,
// averaged) plus in-batch InfoNCE between context and target E_ret.
SslLosses ssl_loss(Graph& g, const EcgModel& model, std::span<const SslPair> batch, bool contrastive);

struct SslReport {
  double lm = 0.0;
  double contrastive = 0.0;
  double total = 0.0;
  bool contrastive_enabled = true;
};

SslReport ssl_step(EcgModel& model, std::span<const SslPair> batch, AdamW& optimizer, bool contrastive);

using StepCallback = std::function<void(std::size_t step, const std::string& line)>;

// Runs config.ssl_steps updates on pairs drawn from shuffled passages.
std::vector<SslReport> train_ssl(EcgModel& model, const std::vector<Passage>& passages, const TrainConfig& config,
                                 std::mt19937_64& rng, const StepCallback& log = {});

// Generation loss from compressed context to target tokens; logits rows
// predict the target text. Exposed for evaluation.
Var ssl_generation_logits(Graph& g, const EcgModel& model, Var e_comp, std::span<const TokenId> target);

// Evaluation pairs at n = t: reconstruction of each half, and first half
// against second half.
std::vector<SslPair> reconstruction_pairs(const std::vector<Passage>& passages, std::size_t n);
std::vector<SslPair> neighbor_pairs(const std::vector<Passage>& passages, std::size_t n);

// Fraction of target tokens whose teacher-forced argmax is correct.
double reconstruction_accuracy(const EcgModel& model, std::span<const SslPair> pairs);

struct PairRecall {
  double context_to_target = 0.0;
  double target_to_context = 0.0;
};
// Recall@1 of the matching side among all pairs under maxsim; ties count as misses.
PairRecall pair_recall(const EcgModel& model, std::span<const SslPair> pairs);

}  // namespace ecg

#endif  // ECG_TRAINING_SSL_H_
