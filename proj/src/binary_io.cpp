#include "risekit/binary_io.hpp"

#include <vector>

namespace risekit::binio {

void WriteFloatsLe(std::ostream& os, std::span<const float> values) {
  if constexpr (std::endian::native == std::endian::little) {
    os.write(reinterpret_cast<const char*>(values.data()),
             static_cast<std::streamsize>(values.size_bytes()));
  } else {
    for (float v : values) WriteLe(os, v);
  }
}

void ReadFloatsLe(std::istream& is, std::span<float> values,
                  const std::string& context) {
  if (!is.read(reinterpret_cast<char*>(values.data()),
               static_cast<std::streamsize>(values.size_bytes()))) {
    Fail(ErrorKind::kIo, context + ": truncated float payload");
  }
  if constexpr (std::endian::native != std::endian::little) {
    for (float& v : values) v = ByteSwap(v);
  }
}

void AppendFloatsLe(std::string& out, std::span<const float> values) {
  const std::size_t start = out.size();
  out.resize(start + values.size_bytes());
  std::memcpy(out.data() + start, values.data(), values.size_bytes());
  if constexpr (std::endian::native != std::endian::little) {
    auto* p = reinterpret_cast<float*>(out.data() + start);
    for (std::size_t i = 0; i < values.size(); ++i) p[i] = ByteSwap(p[i]);
  }
}

void DecodeFloatsLe(std::string_view bytes, std::span<float> out) {
  std::memcpy(out.data(), bytes.data(), out.size_bytes());
  if constexpr (std::endian::native != std::endian::little) {
    for (float& v : out) v = ByteSwap(v);
  }
}

}  // namespace risekit::binio
