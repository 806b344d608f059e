#ifndef ECG_NUMERICS_BINARY_IO_H_
#define ECG_NUMERICS_BINARY_IO_H_

#include <cstdint>
#include <string>
#include <string_view>

namespace ecg {

// Little-endian encoder for the binary file formats.
class ByteWriter {
 public:
  void u8(std::uint8_t v);
  void u16(std::uint16_t v);
  void u32(std::uint32_t v);
  void f32(float v);
  void bytes(std::string_view s);

  std::size_t size() const { return buffer_.size(); }
  std::string take() { return std::move(buffer_); }

 private:
  std::string buffer_;
};

// Little-endian decoder; throws FormatError on truncation.
class ByteReader {
 public:
  ByteReader(std::string_view data, std::string context);

  std::uint8_t u8();
  std::uint16_t u16();
  std::uint32_t u32();
  float f32();
  std::string_view bytes(std::size_t n);

  bool at_end() const { return pos_ == data_.size(); }
  std::size_t position() const { return pos_; }

 private:
  void need(std::size_t n) const;

  std::string_view data_;
  std::string context_;
  std::size_t pos_ = 0;
};

std::string read_file(const std::string& path);
void write_file(const std::string& path, const std::string& bytes);

}  // namespace ecg

#endif  // ECG_NUMERICS_BINARY_IO_H_
