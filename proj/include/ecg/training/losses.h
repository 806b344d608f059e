#ifndef ECG_TRAINING_LOSSES_H_
#define ECG_TRAINING_LOSSES_H_

#include <cstdint>
#include <random>
#include <span>
#include <vector>

#include "ecg/lm/vocabulary.h"
#include "ecg/numerics/graph.h"

namespace ecg {

// Mean next-token cross-entropy. Row i of `logits` predicts targets[i].
Var lm_loss(Var logits, std::span<const TokenId> targets);

// Mean over rows of -log softmax(sim / tau) at the row's positive column.
// `tau` is a scalar Var (learnable temperature) or a positive constant.
Var infonce(Var sim, std::span<const std::size_t> positive_cols, Var tau);
Var infonce(Var sim, std::span<const std::size_t> positive_cols, double tau);

// mean over hard negatives j of ((S_pos - S_j) - alpha * (T_pos - T_j))^2.
// `student` holds one score per document, `teacher` the matching teacher scores.
Var margin_mse(Var student, std::span<const double> teacher, std::size_t positive,
               std::span<const std::size_t> hard_negatives, Var alpha);

// Mean over rows of KL(p_teacher || p_student); both [T x V].
Var kl_distill(Var student_logits, const Tensor& teacher_logits);

// Softmax of scores / tau.
std::vector<double> sampling_probabilities(std::span<const double> scores, double tau);

// Draws `count` distinct indices. Weighted mode follows softmax(scores/tau),
// renormalized after each draw; otherwise uniform.
std::vector<std::size_t> sample_negatives(std::span<const double> scores, double tau, std::size_t count,
                                          std::mt19937_64& rng, bool weighted = true);

}  // namespace ecg

#endif  // ECG_TRAINING_LOSSES_H_
