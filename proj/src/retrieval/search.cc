#include "ecg/retrieval/search.h"

#include <algorithm>
#include <thread>

#include "ecg/common/error.h"
#include "ecg/retrieval/maxsim.h"

namespace ecg {

bool ranks_before(const RankedResult& a, const RankedResult& b) {
  if (a.score != b.score) return a.score > b.score;
  return a.id < b.id;
}

std::vector<RankedResult> rank_scores(std::vector<RankedResult> scored, std::size_t k) {
  k = std::min(k, scored.size());
  std::partial_sort(scored.begin(), scored.begin() + static_cast<std::ptrdiff_t>(k), scored.end(), ranks_before);
  scored.resize(k);
  for (std::size_t i = 0; i < scored.size(); ++i) scored[i].rank = i + 1;
  return scored;
}

SearchResult search_topk(const MultiVectorEmbedding& query, const EmbeddingStore& store, std::size_t k,
                         std::size_t threads) {
  if (k == 0) throw ContractError("search_topk: k must be at least 1");
  if (store.empty()) throw ContractError("search_topk: store is empty");
  if (query.m() != store.m()) {
    throw DimensionError("search_topk: query dim " + std::to_string(query.m()) + " vs store dim " +
                         std::to_string(store.m()));
  }
  const std::size_t count = store.size();
  const std::size_t keep = std::min(k, count);
  threads = std::clamp<std::size_t>(threads, 1, count);

  auto scan = [&](std::size_t begin, std::size_t end) {
    std::vector<RankedResult> part;
    part.reserve(end - begin);
    for (std::size_t i = begin; i < end; ++i) {
      const MultiVectorEmbedding& r = store.at(i);
      part.push_back({r.id, maxsim(query.vectors, r.vectors), 0});
    }
    return rank_scores(std::move(part), keep);
  };

  std::vector<RankedResult> merged;
  if (threads == 1) {
    merged = scan(0, count);
  } else {
    std::vector<std::vector<RankedResult>> parts(threads);
    std::vector<std::thread> workers;
    const std::size_t chunk = (count + threads - 1) / threads;
    for (std::size_t t = 0; t < threads; ++t) {
      const std::size_t begin = std::min(count, t * chunk);
      const std::size_t end = std::min(count, begin + chunk);
      workers.emplace_back([&, t, begin, end] { parts[t] = scan(begin, end); });
    }
    for (std::thread& w : workers) w.join();
    for (auto& p : parts) merged.insert(merged.end(), p.begin(), p.end());
  }
  SearchResult out;
  out.results = rank_scores(std::move(merged), keep);
  out.truncated = k > count;
  return out;
}

}  // namespace ecg
