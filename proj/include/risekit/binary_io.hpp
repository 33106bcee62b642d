#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <istream>
#include <ostream>
#include <span>
#include <string>

#include "risekit/error.hpp"

// Little-endian helpers shared by the RSAL / RMSK dumps and the wire format.
namespace risekit::binio {

template <class T>
T ByteSwap(T v) {
  static_assert(std::is_trivially_copyable_v<T>);
  unsigned char b[sizeof(T)];
  std::memcpy(b, &v, sizeof(T));
  for (std::size_t i = 0; i < sizeof(T) / 2; ++i) std::swap(b[i], b[sizeof(T) - 1 - i]);
  std::memcpy(&v, b, sizeof(T));
  return v;
}

template <class T>
T ToLittle(T v) {
  if constexpr (std::endian::native == std::endian::little) {
    return v;
  } else {
    return ByteSwap(v);
  }
}

template <class T>
void WriteLe(std::ostream& os, T v) {
  v = ToLittle(v);
  os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <class T>
T ReadLe(std::istream& is, const std::string& context) {
  T v;
  if (!is.read(reinterpret_cast<char*>(&v), sizeof(T))) {
    Fail(ErrorKind::kIo, context + ": unexpected end of file");
  }
  return ToLittle(v);
}

void WriteFloatsLe(std::ostream& os, std::span<const float> values);
void ReadFloatsLe(std::istream& is, std::span<float> values,
                  const std::string& context);

// Appends values as little-endian float32 bytes.
void AppendFloatsLe(std::string& out, std::span<const float> values);
// Decodes little-endian float32 bytes; `bytes.size()` must equal 4 * out.size().
void DecodeFloatsLe(std::string_view bytes, std::span<float> out);

inline void PutU32Le(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}
inline std::uint32_t GetU32Le(const unsigned char* p) {
  return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
         (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}

}  // namespace risekit::binio
