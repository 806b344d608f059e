#include "ecg/numerics/checkpoint.h"

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <iterator>
#include <limits>

#include "ecg/common/error.h"
#include "ecg/numerics/binary_io.h"

namespace ecg {

std::string encode_checkpoint(std::span<const NamedTensor> tensors) {
  ByteWriter out;
  out.bytes(std::string_view(kCheckpointMagic, 4));
  out.u32(kCheckpointVersion);
  for (const NamedTensor& nt : tensors) {
    if (nt.name.size() > std::numeric_limits<std::uint16_t>::max()) {
      throw FormatError("checkpoint: tensor name too long: " + nt.name.substr(0, 32) + "...");
    }
    if (nt.tensor.rank() > std::numeric_limits<std::uint8_t>::max()) {
      throw FormatError("checkpoint: rank too large for " + nt.name);
    }
    out.u16(static_cast<std::uint16_t>(nt.name.size()));
    out.bytes(nt.name);
    out.u8(static_cast<std::uint8_t>(nt.tensor.rank()));
    for (std::size_t extent : nt.tensor.shape()) {
      if (extent > std::numeric_limits<std::uint32_t>::max()) {
        throw FormatError("checkpoint: extent too large for " + nt.name);
      }
      out.u32(static_cast<std::uint32_t>(extent));
    }
    for (double v : nt.tensor.data()) out.f32(static_cast<float>(v));
  }
  return out.take();
}

std::vector<NamedTensor> decode_checkpoint(const std::string& bytes) {
  ByteReader in(bytes, "checkpoint");
  if (in.bytes(4) != std::string_view(kCheckpointMagic, 4)) {
    throw FormatError("checkpoint: bad magic (expected ECGP)");
  }
  const std::uint32_t version = in.u32();
  if (version != kCheckpointVersion) {
    throw FormatError("checkpoint: unsupported version " + std::to_string(version));
  }
  std::vector<NamedTensor> tensors;
  while (!in.at_end()) {
    NamedTensor nt;
    const std::uint16_t name_len = in.u16();
    nt.name = std::string(in.bytes(name_len));
    const std::uint8_t rank = in.u8();
    Shape shape(rank);
    for (auto& extent : shape) extent = in.u32();
    std::vector<double> data(shape_numel(shape));
    for (double& v : data) v = static_cast<double>(in.f32());
    nt.tensor = Tensor(std::move(shape), std::move(data));
    tensors.push_back(std::move(nt));
  }
  return tensors;
}

void save_checkpoint(const std::string& path, std::span<const NamedTensor> tensors) {
  write_file(path, encode_checkpoint(tensors));
}

std::vector<NamedTensor> load_checkpoint(const std::string& path) {
  return decode_checkpoint(read_file(path));
}

void round_to_float32(Tensor& t) {
  for (double& v : t.data()) v = static_cast<double>(static_cast<float>(v));
}

}  // namespace ecg
