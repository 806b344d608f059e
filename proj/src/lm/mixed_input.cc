#include "ecg/lm/mixed_input.h"

#include "ecg/common/error.h"

namespace ecg {
namespace {

std::size_t block_rows(const MixedInput::Segment& s) {
  if (auto* v = std::get_if<Var>(&s)) return v->value().rows();
  if (auto* t = std::get_if<Tensor>(&s)) return t->rows();
  return std::get<std::vector<TokenId>>(s).size();
}

}  // namespace

MixedInput& MixedInput::add_token(TokenId id) {
  const TokenId ids[] = {id};
  return add_tokens(ids);
}

MixedInput& MixedInput::add_tokens(std::span<const TokenId> ids) {
  if (ids.empty()) return *this;
  if (segments_.empty() || !std::holds_alternative<std::vector<TokenId>>(segments_.back())) {
    segments_.emplace_back(std::vector<TokenId>{});
  }
  auto& tokens = std::get<std::vector<TokenId>>(segments_.back());
  tokens.insert(tokens.end(), ids.begin(), ids.end());
  size_ += ids.size();
  return *this;
}

MixedInput& MixedInput::add_vectors(Var block) {
  if (!block.valid()) throw ContractError("MixedInput: unbound vector block");
  require_rank2(block.value(), "MixedInput vectors");
  size_ += block.value().rows();
  segments_.emplace_back(block);
  return *this;
}

MixedInput& MixedInput::add_vectors(Tensor block) {
  require_rank2(block, "MixedInput vectors");
  size_ += block.rows();
  segments_.emplace_back(std::move(block));
  return *this;
}

std::size_t MixedInput::vector_count() const {
  std::size_t n = 0;
  for (const Segment& s : segments_) {
    if (!std::holds_alternative<std::vector<TokenId>>(s)) n += block_rows(s);
  }
  return n;
}

std::vector<bool> MixedInput::injected_mask() const {
  std::vector<bool> mask;
  mask.reserve(size_);
  for (const Segment& s : segments_) {
    const bool injected = !std::holds_alternative<std::vector<TokenId>>(s);
    mask.insert(mask.end(), block_rows(s), injected);
  }
  return mask;
}

void MixedInput::validate() const {
  for (std::size_t i = 0; i < segments_.size(); ++i) {
    if (std::holds_alternative<std::vector<TokenId>>(segments_[i])) continue;
    const auto* before = i > 0 ? std::get_if<std::vector<TokenId>>(&segments_[i - 1]) : nullptr;
    const auto* after =
        i + 1 < segments_.size() ? std::get_if<std::vector<TokenId>>(&segments_[i + 1]) : nullptr;
    if (!before || before->back() != Vocabulary::kEmbStart || !after ||
        after->front() != Vocabulary::kEmbStop) {
      throw ContractError("MixedInput: injected vectors must sit between <emb_start> and <emb_stop>");
    }
  }
}

}  // namespace ecg
