#ifndef ECG_RETRIEVAL_BM25_H_
#define ECG_RETRIEVAL_BM25_H_

#include <cstdint>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "ecg/retrieval/search.h"

namespace ecg {

// Lowercased alphanumeric terms.
std::vector<std::string> bm25_terms(std::string_view text);

// Okapi BM25 over an in-memory inverted index.
class Bm25Index {
 public:
  explicit Bm25Index(double k1 = 0.9, double b = 0.4) : k1_(k1), b_(b) {}

  void add(std::uint32_t id, std::vector<std::string> terms);
  void add_text(std::uint32_t id, std::string_view text) { add(id, bm25_terms(text)); }

  double score(std::span<const std::string> query, std::uint32_t id) const;
  std::vector<RankedResult> search(std::span<const std::string> query, std::size_t k) const;
  std::vector<RankedResult> search_text(std::string_view query, std::size_t k) const;

  double idf(const std::string& term) const;
  std::size_t size() const { return docs_.size(); }
  double average_length() const;
  double k1() const { return k1_; }
  double b() const { return b_; }

 private:
  struct Doc {
    std::uint32_t id;
    std::size_t length;
    std::unordered_map<std::string, std::size_t> tf;
  };

  double k1_;
  double b_;
  std::vector<Doc> docs_;
  std::unordered_map<std::uint32_t, std::size_t> by_id_;
  std::unordered_map<std::string, std::size_t> df_;
  std::size_t total_length_ = 0;
};

}  // namespace ecg

#endif  // ECG_RETRIEVAL_BM25_H_
