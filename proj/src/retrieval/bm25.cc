#include "ecg/retrieval/bm25.h"

#include <cctype>
#include <cmath>

#include "ecg/common/error.h"

namespace ecg {

std::vector<std::string> bm25_terms(std::string_view text) {
  std::vector<std::string> terms;
  std::string current;
  for (char ch : text) {
    const unsigned char c = static_cast<unsigned char>(ch);
    if (std::isalnum(c) || c >= 0x80) {
      current.push_back(static_cast<char>(std::tolower(c)));
    } else if (!current.empty()) {
      terms.push_back(std::move(current));
      current.clear();
    }
  }
  if (!current.empty()) terms.push_back(std::move(current));
  return terms;
}

void Bm25Index::add(std::uint32_t id, std::vector<std::string> terms) {
  if (by_id_.count(id)) throw FormatError("bm25: duplicate id " + std::to_string(id));
  Doc doc{id, terms.size(), {}};
  for (std::string& t : terms) ++doc.tf[std::move(t)];
  for (const auto& [term, count] : doc.tf) ++df_[term];
  total_length_ += doc.length;
  by_id_[id] = docs_.size();
  docs_.push_back(std::move(doc));
}

double Bm25Index::average_length() const {
  return docs_.empty() ? 0.0 : static_cast<double>(total_length_) / static_cast<double>(docs_.size());
}

double Bm25Index::idf(const std::string& term) const {
  auto it = df_.find(term);
  const double n = it == df_.end() ? 0.0 : static_cast<double>(it->second);
  const double N = static_cast<double>(docs_.size());
  return std::log(1.0 + (N - n + 0.5) / (n + 0.5));
}

double Bm25Index::score(std::span<const std::string> query, std::uint32_t id) const {
  auto it = by_id_.find(id);
  if (it == by_id_.end()) throw ContractError("bm25: unknown doc id " + std::to_string(id));
  const Doc& doc = docs_[it->second];
  const double avg = average_length();
  const double norm = avg > 0.0 ? static_cast<double>(doc.length) / avg : 0.0;
  double total = 0.0;
  for (const std::string& term : query) {
    auto tf_it = doc.tf.find(term);
    if (tf_it == doc.tf.end()) continue;
    const double tf = static_cast<double>(tf_it->second);
    total += idf(term) * tf * (k1_ + 1.0) / (tf + k1_ * (1.0 - b_ + b_ * norm));
  }
  return total;
}

std::vector<RankedResult> Bm25Index::search(std::span<const std::string> query, std::size_t k) const {
  std::vector<RankedResult> scored;
  scored.reserve(docs_.size());
  for (const Doc& doc : docs_) scored.push_back({doc.id, score(query, doc.id), 0});
  return rank_scores(std::move(scored), k);
}

std::vector<RankedResult> Bm25Index::search_text(std::string_view query, std::size_t k) const {
  const std::vector<std::string> terms = bm25_terms(query);
  return search(terms, k);
}

}  // namespace ecg
