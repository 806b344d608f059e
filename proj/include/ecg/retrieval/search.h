#ifndef ECG_RETRIEVAL_SEARCH_H_
#define ECG_RETRIEVAL_SEARCH_H_

#include <cstdint>
#include <vector>

#include "ecg/retrieval/store.h"

namespace ecg {

struct RankedResult {
  std::uint32_t id = 0;
  double score = 0.0;
  std::size_t rank = 0;  // 1-based

  friend bool operator==(const RankedResult&, const RankedResult&) = default;
};

struct SearchResult {
  std::vector<RankedResult> results;
  // True when k exceeded the store size and every record was returned.
  bool truncated = false;
};

// Higher score first, then ascending id.
bool ranks_before(const RankedResult& a, const RankedResult& b);
// Sorts (id, score) pairs by ranks_before, keeps the first k and numbers ranks.
std::vector<RankedResult> rank_scores(std::vector<RankedResult> scored, std::size_t k);

// Exact full scan. With threads > 1 the scan is split into contiguous
// shards whose partial top-k lists are merged deterministically.
SearchResult search_topk(const MultiVectorEmbedding& query, const EmbeddingStore& store, std::size_t k,
                         std::size_t threads = 1);

}  // namespace ecg

#endif  // ECG_RETRIEVAL_SEARCH_H_
