#include "ecg/lm/generation.h"

#include "ecg/common/error.h"
#include "ecg/numerics/ops.h"

namespace ecg {

Var encode_text(Graph& g, const LanguageModel& model, const Vocabulary& vocab, std::string_view text,
                std::size_t n) {
  const MixedInput input = encoding_input(vocab, text, n);
  const std::size_t offset = encoding_emb_offset(vocab, text);
  Var hidden = model.forward(g, input);
  return slice_rows(hidden, offset, offset + n);
}

std::vector<TokenId> generate(const LanguageModel& model, const MixedInput& input, std::size_t max_new) {
  if (max_new == 0) throw ContractError("generate: max_new must be at least 1");
  MixedInput running = input;
  std::vector<TokenId> out;
  while (out.size() < max_new) {
    Graph g(/*record_gradients=*/false);
    Var hidden = model.forward(g, running);
    const std::size_t last = running.size() - 1;
    const Tensor& logits = model.logits(g, slice_rows(hidden, last, last + 1)).value();
    TokenId best = 0;
    for (std::size_t v = 1; v < logits.numel(); ++v) {
      if (logits[v] > logits[best]) best = static_cast<TokenId>(v);
    }
    out.push_back(best);
    if (best == Vocabulary::kEos) break;
    running.add_token(best);
  }
  return out;
}

std::string generate_text(const LanguageModel& model, const Vocabulary& vocab, const MixedInput& input,
                          std::size_t max_new) {
  std::vector<TokenId> ids = generate(model, input, max_new);
  if (!ids.empty() && ids.back() == Vocabulary::kEos) ids.pop_back();
  return vocab.detokenize(ids);
}

}  // namespace ecg
