#include "ecg/training/losses.h"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "ecg/common/error.h"
#include "ecg/numerics/ops.h"

namespace ecg {

Var lm_loss(Var logits, std::span<const TokenId> targets) {
  if (targets.empty()) throw ContractError("lm_loss: every target position is masked");
  if (logits.value().rows() != targets.size()) {
    throw DimensionError("lm_loss: " + std::to_string(logits.value().rows()) + " logit rows for " +
                         std::to_string(targets.size()) + " targets");
  }
  const std::vector<std::size_t> cols(targets.begin(), targets.end());
  return scale(mean(pick(log_softmax(logits), cols)), -1.0);
}

Var infonce(Var sim, std::span<const std::size_t> positive_cols, Var tau) {
  require_rank2(sim.value(), "infonce");
  if (tau.value().numel() != 1) throw DimensionError("infonce: tau must be a scalar");
  if (!(tau.value()[0] > 0.0)) throw ContractError("infonce: tau must be positive");
  if (positive_cols.size() != sim.value().rows()) {
    throw DimensionError("infonce: one positive column per row required");
  }
  for (std::size_t c : positive_cols) {
    if (c >= sim.value().cols()) throw ContractError("infonce: positive column out of range");
  }
  Var inv_tau = exp(scale(log(tau), -1.0));
  Var scaled = mul_scalar(sim, inv_tau);
  return scale(mean(pick(log_softmax(scaled), positive_cols)), -1.0);
}

Var infonce(Var sim, std::span<const std::size_t> positive_cols, double tau) {
  if (!(tau > 0.0)) throw ContractError("infonce: tau must be positive");
  return infonce(sim, positive_cols, sim.graph()->constant(Tensor::scalar(tau)));
}

Var margin_mse(Var student, std::span<const double> teacher, std::size_t positive,
               std::span<const std::size_t> hard_negatives, Var alpha) {
  if (hard_negatives.empty()) throw ContractError("margin_mse: no hard negatives");
  if (student.value().numel() != teacher.size()) {
    throw DimensionError("margin_mse: student and teacher score counts differ");
  }
  if (positive >= teacher.size()) throw ContractError("margin_mse: positive index out of range");
  Graph& g = *student.graph();
  Var flat = reshape(student, Shape{teacher.size()});
  Var s_pos = element(flat, positive);
  std::vector<Var> terms;
  for (std::size_t j : hard_negatives) {
    if (j >= teacher.size() || j == positive) throw ContractError("margin_mse: bad hard-negative index");
    Var student_margin = sub(s_pos, element(flat, j));
    Var teacher_margin = mul_scalar(g.constant(Tensor::scalar(teacher[positive] - teacher[j])), alpha);
    Var diff = sub(student_margin, teacher_margin);
    terms.push_back(reshape(mul(diff, diff), Shape{1, 1}));
  }
  return mean(terms.size() == 1 ? terms[0] : concat_cols(terms));
}

Var kl_distill(Var student_logits, const Tensor& teacher_logits) {
  const Tensor& s = student_logits.value();
  if (s.shape() != teacher_logits.shape()) {
    throw DimensionError("kl_distill: student " + shape_string(s.shape()) + " vs teacher " +
                         shape_string(teacher_logits.shape()));
  }
  require_rank2(s, "kl_distill");
  Graph& g = *student_logits.graph();
  // Same kernel for both sides, so identical logits cancel exactly.
  Graph scratch(false);
  const Tensor log_pt = log_softmax(scratch.constant(teacher_logits)).value();
  Tensor pt = log_pt;
  for (double& v : pt.data()) v = std::exp(v);
  Var diff = sub(g.constant(log_pt), log_softmax(student_logits));
  return scale(sum(mul(g.constant(pt), diff)), 1.0 / static_cast<double>(s.rows()));
}

std::vector<double> sampling_probabilities(std::span<const double> scores, double tau) {
  if (!(tau > 0.0)) throw ContractError("sample_negatives: tau must be positive");
  if (scores.empty()) return {};
  const double top = *std::max_element(scores.begin(), scores.end()) / tau;
  std::vector<double> p(scores.size());
  double total = 0.0;
  for (std::size_t i = 0; i < scores.size(); ++i) total += p[i] = std::exp(scores[i] / tau - top);
  for (double& v : p) v /= total;
  return p;
}

std::vector<std::size_t> sample_negatives(std::span<const double> scores, double tau, std::size_t count,
                                          std::mt19937_64& rng, bool weighted) {
  if (count > scores.size()) {
    throw ContractError("sample_negatives: asked for " + std::to_string(count) + " of " +
                        std::to_string(scores.size()) + " negatives");
  }
  std::vector<double> weights =
      weighted ? sampling_probabilities(scores, tau) : std::vector<double>(scores.size(), 1.0);
  std::vector<bool> taken(scores.size(), false);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::vector<std::size_t> picked;
  picked.reserve(count);
  for (std::size_t draw = 0; draw < count; ++draw) {
    double total = 0.0;
    for (std::size_t i = 0; i < weights.size(); ++i) total += taken[i] ? 0.0 : weights[i];
    // Remaining mass underflowed: fall back to uniform over what is left.
    if (!(total > 0.0)) {
      for (std::size_t i = 0; i < weights.size(); ++i) weights[i] = taken[i] ? 0.0 : 1.0;
      total = static_cast<double>(weights.size() - draw);
    }
    double u = unit(rng) * total;
    std::size_t chosen = weights.size();
    for (std::size_t i = 0; i < weights.size(); ++i) {
      if (taken[i] || weights[i] <= 0.0) continue;
      chosen = i;
      if (u < weights[i]) break;
      u -= weights[i];
    }
    picked.push_back(chosen);
    taken[chosen] = true;
  }
  return picked;
}

}  // namespace ecg
