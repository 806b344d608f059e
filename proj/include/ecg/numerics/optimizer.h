#ifndef ECG_NUMERICS_OPTIMIZER_H_
#define ECG_NUMERICS_OPTIMIZER_H_

#include <cstddef>
#include <vector>

#include "ecg/numerics/graph.h"

namespace ecg {

struct AdamWOptions {
  double lr = 3e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double weight_decay = 0.01;
  double warmup_ratio = 0.05;
  // Global gradient-norm clip; <= 0 disables clipping.
  double clip_norm = 1.0;
};

// Linear warmup to the peak rate, then linear decay to zero at total_steps.
double linear_schedule(std::size_t step, std::size_t total_steps, double peak, double warmup_ratio);

// Decoupled weight decay, applied only to matrices. Frozen parameters are skipped.
class AdamW {
 public:
  AdamW(std::vector<Parameter*> params, AdamWOptions options, std::size_t total_steps);

  // One update using the accumulated grads, then zeroes them.
  void step();
  void zero_grad();

  std::size_t steps_taken() const { return t_; }
  double current_lr() const;
  const std::vector<Parameter*>& params() const { return params_; }

 private:
  std::vector<Parameter*> params_;
  AdamWOptions options_;
  std::size_t total_steps_;
  std::size_t t_ = 0;
  std::vector<Tensor> m_;
  std::vector<Tensor> v_;
};

}  // namespace ecg

#endif  // ECG_NUMERICS_OPTIMIZER_H_
