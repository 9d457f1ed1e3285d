#pragma once

// Little-endian helpers for the binary cache formats.

#include <array>
#include <bit>
#include <cstdint>
#include <cstring>
#include <istream>
#include <ostream>
#include <string_view>

#include "narrowlab/errors.hpp"

namespace narrowlab::binio {

inline void put_u64(std::ostream& out, std::uint64_t v) {
  std::array<char, 8> buf{};
  for (int i = 0; i < 8; ++i) buf[i] = static_cast<char>((v >> (8 * i)) & 0xff);
  out.write(buf.data(), buf.size());
}

inline void put_u32(std::ostream& out, std::uint32_t v) {
  std::array<char, 4> buf{};
  for (int i = 0; i < 4; ++i) buf[i] = static_cast<char>((v >> (8 * i)) & 0xff);
  out.write(buf.data(), buf.size());
}

inline void put_f64(std::ostream& out, double v) { put_u64(out, std::bit_cast<std::uint64_t>(v)); }

inline std::uint64_t get_u64(std::istream& in) {
  std::array<unsigned char, 8> buf{};
  if (!in.read(reinterpret_cast<char*>(buf.data()), buf.size())) throw FormatError("unexpected end of file");
  std::uint64_t v = 0;
  for (int i = 7; i >= 0; --i) v = (v << 8) | buf[i];
  return v;
}

inline std::uint32_t get_u32(std::istream& in) {
  std::array<unsigned char, 4> buf{};
  if (!in.read(reinterpret_cast<char*>(buf.data()), buf.size())) throw FormatError("unexpected end of file");
  std::uint32_t v = 0;
  for (int i = 3; i >= 0; --i) v = (v << 8) | buf[i];
  return v;
}

inline double get_f64(std::istream& in) { return std::bit_cast<double>(get_u64(in)); }

inline void expect_magic(std::istream& in, std::string_view magic) {
  std::array<char, 16> buf{};
  if (!in.read(buf.data(), static_cast<std::streamsize>(magic.size())) ||
      std::string_view(buf.data(), magic.size()) != magic) {
    throw FormatError("bad magic: expected \"" + std::string(magic) + "\"");
  }
}

}  // namespace narrowlab::binio
