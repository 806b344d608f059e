#ifndef ECG_RETRIEVAL_STORE_H_
#define ECG_RETRIEVAL_STORE_H_

#include <cstdint>
#include <string>
#include <unordered_map>
#include <vector>

#include "ecg/projections/projection.h"

namespace ecg {

// Unified index file ("ECGS"):
//   magic "ECGS", u32 version = 1, u32 m, u32 count, then per record:
//   u32 id, u16 n, n*m float32 values (little endian, row-major).
inline constexpr std::uint32_t kStoreVersion = 1;
inline constexpr std::size_t kStoreHeaderBytes = 16;
inline constexpr std::size_t kStoreRecordOverhead = 6;

class EmbeddingStore {
 public:
  explicit EmbeddingStore(std::size_t m = 0) : m_(m) {}

  // Values are narrowed to float32, so a stored record equals what a reader sees.
  void add(MultiVectorEmbedding record);

  std::size_t m() const { return m_; }
  std::size_t size() const { return records_.size(); }
  bool empty() const { return records_.empty(); }
  const std::vector<MultiVectorEmbedding>& records() const { return records_; }
  const MultiVectorEmbedding& at(std::size_t index) const { return records_.at(index); }
  const MultiVectorEmbedding* find(std::uint32_t id) const;

  std::string encode() const;
  static EmbeddingStore decode(const std::string& bytes);
  void write(const std::string& path) const;
  static EmbeddingStore read(const std::string& path);

 private:
  std::size_t m_;
  std::vector<MultiVectorEmbedding> records_;
  std::unordered_map<std::uint32_t, std::size_t> by_id_;
};

// Bytes the encoded store occupies: header + sum(6 + 4*n*m).
std::size_t disk_usage(const EmbeddingStore& store);
std::size_t store_bytes(std::size_t n, std::size_t m, std::size_t count);

struct DualStoreComparison {
  std::size_t unified_bytes = 0;
  // Retrieval store plus a separate compression store of the same shape.
  std::size_t dual_bytes = 0;
  double payload_ratio = 1.0;
  double total_ratio = 1.0;
};

DualStoreComparison compare_dual_store(std::size_t n, std::size_t m, std::size_t count);

}  // namespace ecg

#endif  // ECG_RETRIEVAL_STORE_H_
