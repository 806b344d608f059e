#ifndef ECG_LM_PROMPTS_H_
#define ECG_LM_PROMPTS_H_

#include <span>
#include <string>
#include <string_view>

#include "ecg/lm/mixed_input.h"
#include "ecg/lm/vocabulary.h"

namespace ecg {

inline constexpr std::string_view kEncodePrompt = "Encode the following text into embedding tokens.";

// Reader template with raw documents joined by blank lines. With no
// documents this is the parametric prompt.
std::string reader_prompt(std::string_view question, std::span<const std::string> contexts);
std::string parametric_prompt(std::string_view question);
// Token-level reader prompt over pre-tokenized (possibly truncated) documents.
// Equals tokenize(reader_prompt(...)) when nothing was truncated.
MixedInput reader_input(const Vocabulary& vocab, std::string_view question,
                        std::span<const std::vector<TokenId>> documents);

// Prompt followed by all but the last target; row i of the result predicts targets[i].
struct ForcedSequence {
  MixedInput input;
  std::vector<std::size_t> rows;
  std::vector<TokenId> targets;
};
ForcedSequence teacher_force(MixedInput prompt, std::span<const TokenId> targets);
// Answer tokens followed by <eos>.
std::vector<TokenId> answer_tokens(const Vocabulary& vocab, std::string_view answer);

// Encoding prompt, the text, then <emb_start>, n x <emb>, <emb_stop>.
MixedInput encoding_input(const Vocabulary& vocab, std::string_view text, std::size_t n);
// Offset of the first <emb> position inside encoding_input(vocab, text, n).
std::size_t encoding_emb_offset(const Vocabulary& vocab, std::string_view text);

// Compressed-context generation prompt: prefix with the question, each
// context wrapped in <emb_start>/<emb_stop> in the given order, then
// "Response:". With no contexts this is the parametric prompt.
MixedInput build_gen_input(const Vocabulary& vocab, std::string_view question,
                           std::span<const Tensor> contexts);
MixedInput build_gen_input(const Vocabulary& vocab, std::string_view question,
                           std::span<const Var> contexts);

// Every fixed string the templates emit, for vocabulary construction.
std::vector<std::string> template_texts();

}  // namespace ecg

#endif  // ECG_LM_PROMPTS_H_
