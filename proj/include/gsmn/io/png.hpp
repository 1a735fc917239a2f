#pragma once

#include <zlib.h>

#include <filesystem>
#include <fstream>

#include "gsmn/simulator.hpp"

namespace gsmn::io {

// Minimal PNG encoder (8-bit RGB, one zlib-compressed IDAT). Enough for the
// visualization outputs without pulling in an image library.
namespace png_detail {

inline void put_be32(std::string& s, uint32_t v) {
  s.push_back(char(v >> 24));
  s.push_back(char(v >> 16));
  s.push_back(char(v >> 8));
  s.push_back(char(v));
}

inline void chunk(std::ostream& out, const char type[4], const std::string& payload) {
  std::string head;
  put_be32(head, uint32_t(payload.size()));
  out.write(head.data(), 4);
  std::string body(type, 4);
  body += payload;
  const uint32_t crc = uint32_t(crc32(0, reinterpret_cast<const Bytef*>(body.data()), uInt(body.size())));
  out.write(body.data(), std::streamsize(body.size()));
  std::string tail;
  put_be32(tail, crc);
  out.write(tail.data(), 4);
}

}  // namespace png_detail

inline void write_png(const std::filesystem::path& path, const sim::Image& img) {
  require(!img.empty(), "write_png: empty image");
  std::ofstream out(path, std::ios::binary);
  require(out.good(), "write_png: cannot open " + path.string());
  static const unsigned char sig[8] = {0x89, 'P', 'N', 'G', '\r', '\n', 0x1a, '\n'};
  out.write(reinterpret_cast<const char*>(sig), 8);

  std::string ihdr;
  png_detail::put_be32(ihdr, uint32_t(img.width));
  png_detail::put_be32(ihdr, uint32_t(img.height));
  ihdr.push_back(8);   // bit depth
  ihdr.push_back(2);   // color type: RGB
  ihdr.push_back(0);   // compression
  ihdr.push_back(0);   // filter
  ihdr.push_back(0);   // interlace
  png_detail::chunk(out, "IHDR", ihdr);

  // Filter byte 0 per scanline.
  std::vector<uint8_t> raw;
  raw.reserve(size_t(img.height) * (size_t(img.width) * 3 + 1));
  for (int y = 0; y < img.height; ++y) {
    raw.push_back(0);
    const uint8_t* row = img.pixel(y, 0);
    raw.insert(raw.end(), row, row + size_t(img.width) * 3);
  }
  uLongf bound = compressBound(uLong(raw.size()));
  std::vector<uint8_t> packed(bound);
  require(compress2(packed.data(), &bound, raw.data(), uLong(raw.size()), 6) == Z_OK,
          "write_png: compression failed");
  png_detail::chunk(out, "IDAT", std::string(reinterpret_cast<char*>(packed.data()), bound));
  png_detail::chunk(out, "IEND", "");
  require(out.good(), "write_png: write failed");
}

}  // namespace gsmn::io
