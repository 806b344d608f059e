#ifndef ECG_NUMERICS_GRAD_CHECK_H_
#define ECG_NUMERICS_GRAD_CHECK_H_

#include <functional>
#include <span>
#include <string>
#include <vector>

#include "ecg/numerics/graph.h"

namespace ecg {

struct GradCheckReport {
  double max_relative_error = 0.0;
  std::string worst_coordinate;
  // Coordinates sitting on a non-differentiable point (one-sided slopes
  // disagree); they are excluded from the error maximum.
  std::vector<std::string> kinks;
  std::size_t coordinates_checked = 0;
  bool passed = false;
};

// Compares reverse-mode gradients of the scalar `loss_fn` against central
// finite differences for every coordinate of every parameter. `loss_fn` must
// read parameters through Graph::param so perturbations are visible.
//
// Relative error per coordinate is |analytic - numeric| / max(|analytic|,
// |numeric|, 1e-5); the floor keeps round-off on vanishing gradients from
// dominating.
GradCheckReport grad_check(const std::function<Var(Graph&)>& loss_fn,
                           std::span<Parameter* const> params, double step = 1e-5,
                           double tolerance = 1e-4);

}  // namespace ecg

#endif  // ECG_NUMERICS_GRAD_CHECK_H_
