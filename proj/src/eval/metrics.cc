#include "ecg/eval/metrics.h"

#include <cctype>
#include <sstream>
#include <vector>

namespace ecg {

std::string normalize_answer(std::string_view text) {
  std::string cleaned;
  cleaned.reserve(text.size());
  for (char c : text) {
    const auto u = static_cast<unsigned char>(c);
    if (std::ispunct(u)) continue;
    cleaned.push_back(static_cast<char>(std::tolower(u)));
  }
  std::istringstream words(cleaned);
  std::vector<std::string> kept;
  for (std::string w; words >> w;) {
    if (kept.empty() && (w == "a" || w == "an" || w == "the")) continue;
    kept.push_back(std::move(w));
  }
  std::string out;
  for (const std::string& w : kept) {
    if (!out.empty()) out += ' ';
    out += w;
  }
  return out;
}

bool exact_match(std::string_view prediction, std::span<const std::string> answers) {
  const std::string p = normalize_answer(prediction);
  for (const std::string& a : answers) {
    if (normalize_answer(a) == p) return true;
  }
  return false;
}

}  // namespace ecg
