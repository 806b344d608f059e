#include "ecg/numerics/optimizer.h"

#include <algorithm>
#include <cmath>

#include "ecg/common/error.h"

namespace ecg {

double linear_schedule(std::size_t step, std::size_t total_steps, double peak, double warmup_ratio) {
  if (total_steps == 0) return peak;
  const double warmup = std::ceil(warmup_ratio * static_cast<double>(total_steps));
  const double s = static_cast<double>(step) + 1.0;
  if (warmup > 0.0 && s <= warmup) return peak * s / warmup;
  const double remaining = static_cast<double>(total_steps) - warmup;
  if (remaining <= 0.0) return peak;
  const double frac = (static_cast<double>(total_steps) - s + 1.0) / remaining;
  return peak * std::clamp(frac, 0.0, 1.0);
}

AdamW::AdamW(std::vector<Parameter*> params, AdamWOptions options, std::size_t total_steps)
    : params_(std::move(params)), options_(options), total_steps_(total_steps) {
  for (Parameter* p : params_) {
    if (p == nullptr) throw ContractError("AdamW: null parameter");
    m_.push_back(Tensor::zeros_like(p->value));
    v_.push_back(Tensor::zeros_like(p->value));
  }
}

double AdamW::current_lr() const {
  return linear_schedule(t_, total_steps_, options_.lr, options_.warmup_ratio);
}

void AdamW::zero_grad() {
  for (Parameter* p : params_) p->zero_grad();
}

void AdamW::step() {
  const double lr = current_lr();
  ++t_;
  double clip = 1.0;
  if (options_.clip_norm > 0.0) {
    double sq = 0.0;
    for (Parameter* p : params_) {
      if (p->frozen || p->grad.empty()) continue;
      for (double g : p->grad.data()) sq += g * g;
    }
    const double norm = std::sqrt(sq);
    if (!std::isfinite(norm)) throw NumericalError("AdamW: non-finite gradient norm");
    if (norm > options_.clip_norm) clip = options_.clip_norm / norm;
  }
  const double bc1 = 1.0 - std::pow(options_.beta1, static_cast<double>(t_));
  const double bc2 = 1.0 - std::pow(options_.beta2, static_cast<double>(t_));
  for (std::size_t k = 0; k < params_.size(); ++k) {
    Parameter* p = params_[k];
    if (p->frozen || p->grad.empty()) continue;
    const bool decay = p->value.rank() >= 2;
    auto w = p->value.data();
    auto g = p->grad.data();
    auto m = m_[k].data();
    auto v = v_[k].data();
    for (std::size_t i = 0; i < w.size(); ++i) {
      const double gi = g[i] * clip;
      m[i] = options_.beta1 * m[i] + (1.0 - options_.beta1) * gi;
      v[i] = options_.beta2 * v[i] + (1.0 - options_.beta2) * gi * gi;
      const double mhat = m[i] / bc1;
      const double vhat = v[i] / bc2;
      if (decay) w[i] -= lr * options_.weight_decay * w[i];
      w[i] -= lr * mhat / (std::sqrt(vhat) + options_.eps);
    }
  }
  zero_grad();
}

}  // namespace ecg
