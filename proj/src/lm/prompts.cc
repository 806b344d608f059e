#include "ecg/lm/prompts.h"

#include <vector>

#include "ecg/common/error.h"

namespace ecg {
namespace {

constexpr std::string_view kResponse = "Response:";

std::string compressed_prefix(std::string_view question) {
  return "Generate a response to the following question using the embedded context.\n\nQuestion: " +
         std::string(question) + "\n\nContext:";
}

template <typename Block>
MixedInput gen_input(const Vocabulary& vocab, std::string_view question, std::span<const Block> contexts) {
  MixedInput input;
  if (contexts.empty()) {
    input.add_tokens(vocab.tokenize(parametric_prompt(question)));
    return input;
  }
  input.add_tokens(vocab.tokenize(compressed_prefix(question)));
  for (const Block& block : contexts) {
    input.add_token(Vocabulary::kEmbStart);
    input.add_vectors(block);
    input.add_token(Vocabulary::kEmbStop);
  }
  input.add_tokens(vocab.tokenize(kResponse));
  return input;
}

}  // namespace

std::string reader_prompt(std::string_view question, std::span<const std::string> contexts) {
  if (contexts.empty()) return parametric_prompt(question);
  std::string context;
  for (std::size_t i = 0; i < contexts.size(); ++i) {
    if (i) context += "\n\n";
    context += contexts[i];
  }
  return "Generate a response to the following question using the context.\n\nQuestion: " +
         std::string(question) + "\n\nContext: " + context + "\n\n" + std::string(kResponse);
}

std::string parametric_prompt(std::string_view question) {
  return "Generate a response to the following question.\n\nQuestion: " + std::string(question) +
         "\n\n" + std::string(kResponse);
}

MixedInput reader_input(const Vocabulary& vocab, std::string_view question,
                        std::span<const std::vector<TokenId>> documents) {
  MixedInput input;
  if (documents.empty()) {
    input.add_tokens(vocab.tokenize(parametric_prompt(question)));
    return input;
  }
  input.add_tokens(vocab.tokenize("Generate a response to the following question using the context.\n\nQuestion: " +
                                  std::string(question) + "\n\nContext:"));
  for (const std::vector<TokenId>& doc : documents) input.add_tokens(doc);
  input.add_tokens(vocab.tokenize(kResponse));
  return input;
}

ForcedSequence teacher_force(MixedInput prompt, std::span<const TokenId> targets) {
  if (targets.empty()) throw ContractError("teacher_force: no targets");
  if (prompt.size() == 0) throw ContractError("teacher_force: empty prompt");
  ForcedSequence out;
  const std::size_t first = prompt.size() - 1;
  prompt.add_tokens(targets.first(targets.size() - 1));
  out.input = std::move(prompt);
  out.targets.assign(targets.begin(), targets.end());
  for (std::size_t i = 0; i < targets.size(); ++i) out.rows.push_back(first + i);
  return out;
}

std::vector<TokenId> answer_tokens(const Vocabulary& vocab, std::string_view answer) {
  std::vector<TokenId> ids = vocab.tokenize(answer);
  ids.push_back(Vocabulary::kEos);
  return ids;
}

MixedInput encoding_input(const Vocabulary& vocab, std::string_view text, std::size_t n) {
  if (n == 0) throw ContractError("encoding_input: n must be at least 1");
  MixedInput input;
  input.add_tokens(vocab.tokenize(kEncodePrompt));
  input.add_tokens(vocab.tokenize(text));
  input.add_token(Vocabulary::kEmbStart);
  const std::vector<TokenId> body(n, Vocabulary::kEmb);
  input.add_tokens(body);
  input.add_token(Vocabulary::kEmbStop);
  return input;
}

std::size_t encoding_emb_offset(const Vocabulary& vocab, std::string_view text) {
  return vocab.tokenize(kEncodePrompt).size() + vocab.tokenize(text).size() + 1;
}

MixedInput build_gen_input(const Vocabulary& vocab, std::string_view question,
                           std::span<const Tensor> contexts) {
  return gen_input(vocab, question, contexts);
}

MixedInput build_gen_input(const Vocabulary& vocab, std::string_view question,
                           std::span<const Var> contexts) {
  return gen_input(vocab, question, contexts);
}

std::vector<std::string> template_texts() {
  const std::vector<std::string> context{"x"};
  return {std::string(kEncodePrompt), reader_prompt("x", context), parametric_prompt("x"),
          compressed_prefix("x") + " " + std::string(kResponse)};
}

}  // namespace ecg
