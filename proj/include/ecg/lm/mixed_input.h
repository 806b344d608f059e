#ifndef ECG_LM_MIXED_INPUT_H_
#define ECG_LM_MIXED_INPUT_H_

#include <span>
#include <variant>
#include <vector>

#include "ecg/lm/vocabulary.h"
#include "ecg/numerics/graph.h"

namespace ecg {

// Ordered mix of token ids and injected vector blocks. A vector block is
// either a Var of the graph the model runs in or a plain tensor that enters
// as a constant. Blocks must sit directly between <emb_start> and <emb_stop>.
class MixedInput {
 public:
  using Segment = std::variant<std::vector<TokenId>, Var, Tensor>;

  MixedInput& add_token(TokenId id);
  MixedInput& add_tokens(std::span<const TokenId> ids);
  MixedInput& add_vectors(Var block);
  MixedInput& add_vectors(Tensor block);

  const std::vector<Segment>& segments() const { return segments_; }
  std::size_t size() const { return size_; }
  std::size_t vector_count() const;
  // True at positions filled by injected vectors.
  std::vector<bool> injected_mask() const;
  // Throws ContractError when a vector block is not wrapped by the markers.
  void validate() const;

 private:
  std::vector<Segment> segments_;
  std::size_t size_ = 0;
};

}  // namespace ecg

#endif  // ECG_LM_MIXED_INPUT_H_
