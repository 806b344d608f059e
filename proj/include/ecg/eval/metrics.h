#ifndef ECG_EVAL_METRICS_H_
#define ECG_EVAL_METRICS_H_

#include <span>
#include <string>
#include <string_view>

namespace ecg {

// Lowercase, punctuation removed, leading article dropped, whitespace collapsed.
std::string normalize_answer(std::string_view text);

bool exact_match(std::string_view prediction, std::span<const std::string> answers);

}  // namespace ecg

#endif  // ECG_EVAL_METRICS_H_
