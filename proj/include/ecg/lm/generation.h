#ifndef ECG_LM_GENERATION_H_
#define ECG_LM_GENERATION_H_

#include <string>
#include <string_view>
#include <vector>

#include "ecg/lm/model.h"
#include "ecg/lm/prompts.h"

namespace ecg {

// Final hidden states at the n <emb> positions of the encoding prompt [n x d].
Var encode_text(Graph& g, const LanguageModel& model, const Vocabulary& vocab, std::string_view text,
                std::size_t n);

// Greedy decoding; ties go to the lowest id. Stops after <eos> (included in
// the result) or after max_new tokens.
std::vector<TokenId> generate(const LanguageModel& model, const MixedInput& input, std::size_t max_new);

// Generated tokens up to (excluding) <eos>, detokenized.
std::string generate_text(const LanguageModel& model, const Vocabulary& vocab, const MixedInput& input,
                          std::size_t max_new);

}  // namespace ecg

#endif  // ECG_LM_GENERATION_H_
