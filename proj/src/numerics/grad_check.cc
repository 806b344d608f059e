#include "ecg/numerics/grad_check.h"

#include <algorithm>
#include <cmath>

#include "ecg/common/error.h"

namespace ecg {
namespace {

constexpr double kDenominatorFloor = 1e-5;

std::string coordinate_name(const Parameter& p, std::size_t index) {
  return (p.name.empty() ? std::string("param") : p.name) + "[" + std::to_string(index) + "]";
}

double evaluate(const std::function<Var(Graph&)>& loss_fn, const Parameter& p, std::size_t index) {
  Graph g(/*record_gradients=*/false);
  const double value = loss_fn(g).value().item();
  if (!std::isfinite(value)) {
    throw NumericalError("grad_check: loss is not finite at perturbed coordinate " +
                         coordinate_name(p, index));
  }
  return value;
}

}  // namespace

GradCheckReport grad_check(const std::function<Var(Graph&)>& loss_fn,
                           std::span<Parameter* const> params, double step, double tolerance) {
  if (!(step > 0.0 && step <= 1e-2)) throw ContractError("grad_check: step must lie in (0, 1e-2]");

  for (Parameter* p : params) p->zero_grad();
  double base = 0.0;
  {
    Graph g;
    Var loss = loss_fn(g);
    base = loss.value().item();
    if (!std::isfinite(base)) throw NumericalError("grad_check: loss is not finite at the base point");
    g.backward(loss);
  }

  struct Probe {
    double numeric;
    double spread;  // |forward - backward| one-sided slope gap
  };
  auto probe = [&](Parameter* p, std::size_t i, double h) {
    const double saved = p->value[i];
    p->value[i] = saved + h;
    const double plus = evaluate(loss_fn, *p, i);
    p->value[i] = saved - h;
    const double minus = evaluate(loss_fn, *p, i);
    p->value[i] = saved;
    return Probe{(plus - minus) / (2.0 * h), std::abs((plus - base) / h - (base - minus) / h)};
  };
  auto relative = [](double a, double n) {
    return std::abs(a - n) / std::max({std::abs(a), std::abs(n), kDenominatorFloor});
  };

  GradCheckReport report;
  for (Parameter* p : params) {
    const Tensor analytic = p->grad;
    for (std::size_t i = 0; i < p->value.numel(); ++i) {
      const double a = analytic[i];
      const Probe coarse = probe(p, i, step);
      if (coarse.spread > std::max(1e-3, 0.05 * (std::abs(coarse.numeric) + coarse.spread))) {
        report.kinks.push_back(coordinate_name(*p, i));
        continue;
      }
      double err = relative(a, coarse.numeric);
      if (err > tolerance) {
        // A smooth slope gap shrinks with the step; a kink inside the probe
        // interval does not.
        const Probe fine = probe(p, i, step / 10.0);
        if (fine.spread > 0.5 * coarse.spread && coarse.spread > 1e-9) {
          report.kinks.push_back(coordinate_name(*p, i));
          continue;
        }
        err = std::min(err, relative(a, fine.numeric));
      }
      ++report.coordinates_checked;
      if (err > report.max_relative_error || report.worst_coordinate.empty()) {
        report.max_relative_error = err;
        report.worst_coordinate = coordinate_name(*p, i);
      }
    }
  }
  report.passed = report.max_relative_error <= tolerance;
  for (Parameter* p : params) p->zero_grad();
  return report;
}

}  // namespace ecg
