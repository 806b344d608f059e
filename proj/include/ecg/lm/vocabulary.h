#ifndef ECG_LM_VOCABULARY_H_
#define ECG_LM_VOCABULARY_H_

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace ecg {

using TokenId = std::uint32_t;

// Whitespace-word vocabulary with a character fallback. Words missing from the
// vocabulary are spelled as a leading character piece followed by "##c"
// continuation pieces; characters without a piece become <unk>.
class Vocabulary {
 public:
  static constexpr TokenId kEos = 0;
  static constexpr TokenId kPad = 1;
  static constexpr TokenId kBos = 2;
  static constexpr TokenId kUnk = 3;
  static constexpr TokenId kEmbStart = 4;
  static constexpr TokenId kEmb = 5;
  static constexpr TokenId kEmbStop = 6;
  static constexpr std::size_t kNumSpecial = 7;

  static const std::vector<std::string>& special_tokens();

  // Every whitespace word of `texts`, plus a leading and a continuation piece
  // for every character seen.
  static Vocabulary build(std::span<const std::string> texts);
  // Specials first in their fixed order, then the remaining tokens.
  static Vocabulary from_tokens(std::vector<std::string> tokens);
  static Vocabulary load(const std::string& path);
  void save(const std::string& path) const;

  std::vector<TokenId> tokenize(std::string_view text) const;
  std::string detokenize(std::span<const TokenId> ids) const;

  std::size_t size() const { return tokens_.size(); }
  const std::string& token(TokenId id) const;
  std::optional<TokenId> id(std::string_view token) const;
  const std::vector<std::string>& tokens() const { return tokens_; }

 private:
  std::vector<std::string> tokens_;
  std::unordered_map<std::string, TokenId> index_;
};

}  // namespace ecg

#endif  // ECG_LM_VOCABULARY_H_
