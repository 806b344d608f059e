#ifndef ECG_NUMERICS_CHECKPOINT_H_
#define ECG_NUMERICS_CHECKPOINT_H_

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "ecg/numerics/tensor.h"

namespace ecg {

struct NamedTensor {
  std::string name;
  Tensor tensor;
};

// Parameter checkpoint ("ECGP"):
//   magic "ECGP", u32 version = 1, then until end of file, per tensor:
//   u16 name length, name bytes, u8 rank, u32 extent per dimension,
//   float32 values (IEEE-754 little endian, row-major).
// Values are narrowed to float32 on write.
inline constexpr char kCheckpointMagic[4] = {'E', 'C', 'G', 'P'};
inline constexpr std::uint32_t kCheckpointVersion = 1;

std::string encode_checkpoint(std::span<const NamedTensor> tensors);
std::vector<NamedTensor> decode_checkpoint(const std::string& bytes);

void save_checkpoint(const std::string& path, std::span<const NamedTensor> tensors);
std::vector<NamedTensor> load_checkpoint(const std::string& path);

// Rounds every entry to the nearest float32, i.e. what a checkpoint stores.
void round_to_float32(Tensor& t);

}  // namespace ecg

#endif  // ECG_NUMERICS_CHECKPOINT_H_
