#ifndef ECG_TRAINING_GRAD_SUITE_H_
#define ECG_TRAINING_GRAD_SUITE_H_

#include <cstdint>
#include <string>
#include <vector>

#include "ecg/numerics/grad_check.h"

namespace ecg {

struct GradSuiteEntry {
  std::string name;
  GradCheckReport report;
};

// Gradient checks of every loss, both projection blocks and the two
// end-to-end training losses on micro shapes (B=2, t=2, d=8).
std::vector<GradSuiteEntry> run_grad_suite(std::uint64_t seed = 0, double tolerance = 1e-4);

}  // namespace ecg

#endif  // ECG_TRAINING_GRAD_SUITE_H_
