#include "ecg/lm/vocabulary.h"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

#include "ecg/common/error.h"

namespace ecg {
namespace {

constexpr std::string_view kContinuation = "##";

std::vector<std::string_view> split_words(std::string_view text) {
  std::vector<std::string_view> words;
  std::size_t i = 0;
  while (i < text.size()) {
    while (i < text.size() && std::isspace(static_cast<unsigned char>(text[i]))) ++i;
    std::size_t j = i;
    while (j < text.size() && !std::isspace(static_cast<unsigned char>(text[j]))) ++j;
    if (j > i) words.push_back(text.substr(i, j - i));
    i = j;
  }
  return words;
}

// Splits a word into UTF-8 code points so multi-byte characters stay whole.
std::vector<std::string_view> split_chars(std::string_view word) {
  std::vector<std::string_view> chars;
  std::size_t i = 0;
  while (i < word.size()) {
    const unsigned char lead = static_cast<unsigned char>(word[i]);
    std::size_t len = 1;
    if (lead >= 0xf0) len = 4;
    else if (lead >= 0xe0) len = 3;
    else if (lead >= 0xc0) len = 2;
    len = std::min(len, word.size() - i);
    chars.push_back(word.substr(i, len));
    i += len;
  }
  return chars;
}

}  // namespace

const std::vector<std::string>& Vocabulary::special_tokens() {
  static const std::vector<std::string> kSpecials = {"<eos>", "<pad>",       "<bos>",     "<unk>",
                                                     "<emb_start>", "<emb>", "<emb_stop>"};
  return kSpecials;
}

Vocabulary Vocabulary::build(std::span<const std::string> texts) {
  std::set<std::string> tokens;
  for (const std::string& text : texts) {
    for (std::string_view word : split_words(text)) {
      tokens.emplace(word);
      for (std::string_view c : split_chars(word)) {
        tokens.emplace(c);
        tokens.emplace(std::string(kContinuation) + std::string(c));
      }
    }
  }
  return from_tokens(std::vector<std::string>(tokens.begin(), tokens.end()));
}

Vocabulary Vocabulary::from_tokens(std::vector<std::string> tokens) {
  Vocabulary v;
  const auto& specials = special_tokens();
  v.tokens_ = specials;
  std::set<std::string> rest;
  for (std::string& t : tokens) {
    if (t.empty()) throw FormatError("vocabulary: empty token");
    if (std::any_of(t.begin(), t.end(), [](char c) { return std::isspace(static_cast<unsigned char>(c)); })) {
      throw FormatError("vocabulary: token contains whitespace: " + t);
    }
    if (std::find(specials.begin(), specials.end(), t) != specials.end()) continue;
    rest.insert(std::move(t));
  }
  v.tokens_.insert(v.tokens_.end(), rest.begin(), rest.end());
  for (std::size_t i = 0; i < v.tokens_.size(); ++i) v.index_[v.tokens_[i]] = static_cast<TokenId>(i);
  return v;
}

Vocabulary Vocabulary::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open vocabulary " + path);
  std::vector<std::string> tokens;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    if (line_no <= kNumSpecial && line != special_tokens()[line_no - 1]) {
      throw FormatError("vocabulary " + path + ": line " + std::to_string(line_no) + " must be " +
                        special_tokens()[line_no - 1]);
    }
    tokens.push_back(line);
  }
  return from_tokens(std::move(tokens));
}

void Vocabulary::save(const std::string& path) const {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw FormatError("cannot write vocabulary " + path);
  for (const std::string& t : tokens_) out << t << '\n';
}

std::vector<TokenId> Vocabulary::tokenize(std::string_view text) const {
  std::vector<TokenId> ids;
  for (std::string_view word : split_words(text)) {
    if (auto it = index_.find(std::string(word)); it != index_.end()) {
      ids.push_back(it->second);
      continue;
    }
    bool first = true;
    for (std::string_view c : split_chars(word)) {
      const std::string piece = first ? std::string(c) : std::string(kContinuation) + std::string(c);
      auto it = index_.find(piece);
      ids.push_back(it == index_.end() ? kUnk : it->second);
      first = false;
    }
  }
  return ids;
}

std::string Vocabulary::detokenize(std::span<const TokenId> ids) const {
  std::string out;
  for (TokenId id : ids) {
    const std::string& t = token(id);
    if (t.size() > kContinuation.size() && t.starts_with(kContinuation)) {
      out += t.substr(kContinuation.size());
      continue;
    }
    if (!out.empty()) out += ' ';
    out += t;
  }
  return out;
}

const std::string& Vocabulary::token(TokenId id) const {
  if (id >= tokens_.size()) throw ContractError("token id " + std::to_string(id) + " out of range");
  return tokens_[id];
}

std::optional<TokenId> Vocabulary::id(std::string_view token) const {
  auto it = index_.find(std::string(token));
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

}  // namespace ecg
