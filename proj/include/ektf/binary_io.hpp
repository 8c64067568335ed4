// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <bit>
#include <cstdint>
#include <istream>
#include <ostream>
#include <string>

#include "ektf/error.hpp"

namespace ektf::io {

// Explicit little-endian encoding, independent of host byte order.

template <typename UInt>
void write_le(std::ostream& out, UInt value) {
  char bytes[sizeof(UInt)];
  for (std::size_t i = 0; i < sizeof(UInt); ++i) {
    bytes[i] = static_cast<char>((value >> (8 * i)) & 0xff);
  }
  out.write(bytes, sizeof(UInt));
}

inline void write_f64(std::ostream& out, double value) {
  write_le(out, std::bit_cast<std::uint64_t>(value));
}

inline void write_string(std::ostream& out, const std::string& s) {
  write_le(out, static_cast<std::uint32_t>(s.size()));
  out.write(s.data(), static_cast<std::streamsize>(s.size()));
}

template <typename UInt>
UInt read_le(std::istream& in) {
  unsigned char bytes[sizeof(UInt)];
  if (!in.read(reinterpret_cast<char*>(bytes), sizeof(UInt))) {
    throw DataError("unexpected end of binary file");
  }
  UInt value = 0;
  for (std::size_t i = 0; i < sizeof(UInt); ++i) value |= static_cast<UInt>(bytes[i]) << (8 * i);
  return value;
}

inline double read_f64(std::istream& in) { return std::bit_cast<double>(read_le<std::uint64_t>(in)); }

inline std::string read_string(std::istream& in, std::uint32_t max_len = 1u << 20) {
  const auto n = read_le<std::uint32_t>(in);
  if (n > max_len) throw DataError("corrupt binary file: string length " + std::to_string(n));
  std::string s(n, '\0');
  if (n > 0 && !in.read(s.data(), n)) throw DataError("unexpected end of binary file");
  return s;
}

}  // namespace ektf::io
