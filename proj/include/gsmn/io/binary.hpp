#pragma once

#include <cstring>
#include <fstream>
#include <string>
#include <vector>

#include "gsmn/common.hpp"

namespace gsmn::io {

// Little-endian primitive writer/reader for the binary containers.
// x86 is little-endian; the explicit byte handling keeps the format pinned.

inline void put_u32(std::ostream& out, uint32_t v) {
  unsigned char b[4] = {uint8_t(v), uint8_t(v >> 8), uint8_t(v >> 16), uint8_t(v >> 24)};
  out.write(reinterpret_cast<char*>(b), 4);
}

inline void put_u64(std::ostream& out, uint64_t v) {
  put_u32(out, uint32_t(v));
  put_u32(out, uint32_t(v >> 32));
}

inline void put_f32(std::ostream& out, float v) {
  uint32_t bits;
  std::memcpy(&bits, &v, 4);
  put_u32(out, bits);
}

inline void put_f64(std::ostream& out, double v) {
  uint64_t bits;
  std::memcpy(&bits, &v, 8);
  put_u64(out, bits);
}

inline void put_string(std::ostream& out, const std::string& s) {
  put_u32(out, uint32_t(s.size()));
  out.write(s.data(), std::streamsize(s.size()));
}

inline void put_bytes(std::ostream& out, const std::vector<uint8_t>& v) {
  put_u32(out, uint32_t(v.size()));
  out.write(reinterpret_cast<const char*>(v.data()), std::streamsize(v.size()));
}

inline uint32_t get_u32(std::istream& in) {
  unsigned char b[4];
  in.read(reinterpret_cast<char*>(b), 4);
  require(bool(in), "binary read: truncated stream");
  return uint32_t(b[0]) | uint32_t(b[1]) << 8 | uint32_t(b[2]) << 16 | uint32_t(b[3]) << 24;
}

inline uint64_t get_u64(std::istream& in) {
  const uint64_t lo = get_u32(in);
  const uint64_t hi = get_u32(in);
  return lo | hi << 32;
}

inline float get_f32(std::istream& in) {
  const uint32_t bits = get_u32(in);
  float v;
  std::memcpy(&v, &bits, 4);
  return v;
}

inline double get_f64(std::istream& in) {
  const uint64_t bits = get_u64(in);
  double v;
  std::memcpy(&v, &bits, 8);
  return v;
}

inline std::string get_string(std::istream& in) {
  const uint32_t n = get_u32(in);
  std::string s(n, '\0');
  in.read(s.data(), std::streamsize(n));
  require(bool(in), "binary read: truncated string");
  return s;
}

inline std::vector<uint8_t> get_bytes(std::istream& in) {
  const uint32_t n = get_u32(in);
  std::vector<uint8_t> v(n);
  in.read(reinterpret_cast<char*>(v.data()), std::streamsize(n));
  require(bool(in), "binary read: truncated bytes");
  return v;
}

}  // namespace gsmn::io
