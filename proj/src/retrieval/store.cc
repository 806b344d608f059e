#include "ecg/retrieval/store.h"

#include <limits>

#include "ecg/common/error.h"
#include "ecg/numerics/binary_io.h"

namespace ecg {
namespace {

constexpr char kMagic[4] = {'E', 'C', 'G', 'S'};

}  // namespace

void EmbeddingStore::add(MultiVectorEmbedding record) {
  require_rank2(record.vectors, "store record");
  if (record.n() == 0) throw ContractError("store: record " + std::to_string(record.id) + " has no vectors");
  if (record.n() > std::numeric_limits<std::uint16_t>::max()) {
    throw LengthError("store: record " + std::to_string(record.id) + " has too many vectors");
  }
  if (m_ == 0 && records_.empty()) m_ = record.m();
  if (record.m() != m_) {
    throw DimensionError("store: record " + std::to_string(record.id) + " has dim " +
                         std::to_string(record.m()) + ", store dim is " + std::to_string(m_));
  }
  if (by_id_.count(record.id)) throw FormatError("store: duplicate id " + std::to_string(record.id));
  for (double& v : record.vectors.data()) v = static_cast<double>(static_cast<float>(v));
  by_id_[record.id] = records_.size();
  records_.push_back(std::move(record));
}

const MultiVectorEmbedding* EmbeddingStore::find(std::uint32_t id) const {
  auto it = by_id_.find(id);
  return it == by_id_.end() ? nullptr : &records_[it->second];
}

std::string EmbeddingStore::encode() const {
  ByteWriter out;
  out.bytes(std::string_view(kMagic, 4));
  out.u32(kStoreVersion);
  out.u32(static_cast<std::uint32_t>(m_));
  out.u32(static_cast<std::uint32_t>(records_.size()));
  for (const MultiVectorEmbedding& r : records_) {
    out.u32(r.id);
    out.u16(static_cast<std::uint16_t>(r.n()));
    for (double v : r.vectors.data()) out.f32(static_cast<float>(v));
  }
  return out.take();
}

EmbeddingStore EmbeddingStore::decode(const std::string& bytes) {
  ByteReader in(bytes, "store");
  if (in.bytes(4) != std::string_view(kMagic, 4)) throw FormatError("store: bad magic (expected ECGS)");
  const std::uint32_t version = in.u32();
  if (version != kStoreVersion) {
    throw FormatError("store: unsupported version " + std::to_string(version) + " (expected " +
                      std::to_string(kStoreVersion) + ")");
  }
  const std::uint32_t m = in.u32();
  const std::uint32_t count = in.u32();
  EmbeddingStore store(m);
  for (std::uint32_t i = 0; i < count; ++i) {
    MultiVectorEmbedding r;
    r.id = in.u32();
    const std::uint16_t n = in.u16();
    if (n == 0) throw FormatError("store: record " + std::to_string(r.id) + " has no vectors");
    std::vector<double> values(static_cast<std::size_t>(n) * m);
    for (double& v : values) v = static_cast<double>(in.f32());
    r.vectors = Tensor(Shape{n, m}, std::move(values));
    if (store.find(r.id)) throw FormatError("store: duplicate id " + std::to_string(r.id));
    store.add(std::move(r));
  }
  if (!in.at_end()) throw FormatError("store: trailing bytes after " + std::to_string(count) + " records");
  return store;
}

void EmbeddingStore::write(const std::string& path) const { write_file(path, encode()); }

EmbeddingStore EmbeddingStore::read(const std::string& path) { return decode(read_file(path)); }

std::size_t disk_usage(const EmbeddingStore& store) {
  std::size_t bytes = kStoreHeaderBytes;
  for (const MultiVectorEmbedding& r : store.records()) bytes += kStoreRecordOverhead + 4 * r.n() * r.m();
  return bytes;
}

std::size_t store_bytes(std::size_t n, std::size_t m, std::size_t count) {
  return kStoreHeaderBytes + count * (kStoreRecordOverhead + 4 * n * m);
}

DualStoreComparison compare_dual_store(std::size_t n, std::size_t m, std::size_t count) {
  DualStoreComparison c;
  c.unified_bytes = store_bytes(n, m, count);
  c.dual_bytes = 2 * c.unified_bytes;
  if (count == 0 || n == 0 || m == 0) return c;
  const std::size_t payload = count * 4 * n * m;
  c.payload_ratio = static_cast<double>(payload) / static_cast<double>(2 * payload);
  c.total_ratio = static_cast<double>(c.unified_bytes) / static_cast<double>(c.dual_bytes);
  return c;
}

}  // namespace ecg
