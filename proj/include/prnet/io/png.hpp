#pragma once

#include <zlib.h>

#include <cstdint>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <string>
#include <vector>

#include "prnet/core/errors.hpp"

namespace prnet {

/// Interleaved 8-bit raster. channels: 1 gray, 2 gray+alpha, 3 rgb, 4 rgba.
struct ImageU8 {
  int64_t width = 0;
  int64_t height = 0;
  int channels = 0;
  std::vector<uint8_t> pixels;

  uint8_t& at(int64_t y, int64_t x, int c) {
    return pixels[size_t((y * width + x) * channels + c)];
  }
  uint8_t at(int64_t y, int64_t x, int c) const {
    return pixels[size_t((y * width + x) * channels + c)];
  }
};

namespace detail {

inline void put_u32be(std::vector<uint8_t>& v, uint32_t x) {
  v.push_back(uint8_t(x >> 24));
  v.push_back(uint8_t(x >> 16));
  v.push_back(uint8_t(x >> 8));
  v.push_back(uint8_t(x));
}

inline uint32_t get_u32be(const uint8_t* p) {
  return (uint32_t(p[0]) << 24) | (uint32_t(p[1]) << 16) | (uint32_t(p[2]) << 8) | uint32_t(p[3]);
}

inline void png_chunk(std::vector<uint8_t>& out, const char type[4], const uint8_t* data,
                      size_t len) {
  put_u32be(out, uint32_t(len));
  const size_t type_at = out.size();
  out.insert(out.end(), type, type + 4);
  out.insert(out.end(), data, data + len);
  const uint32_t crc =
      uint32_t(::crc32(0, out.data() + type_at, uInt(4 + len)));
  put_u32be(out, crc);
}

inline int paeth(int a, int b, int c) {
  const int p = a + b - c;
  const int pa = std::abs(p - a), pb = std::abs(p - b), pc = std::abs(p - c);
  if (pa <= pb && pa <= pc) return a;
  if (pb <= pc) return b;
  return c;
}

}  // namespace detail

static const uint8_t kPngSignature[8] = {137, 80, 78, 71, 13, 10, 26, 10};

/// Encode to an in-memory PNG (bit depth 8, no interlace, filter 0 rows).
inline std::vector<uint8_t> encode_png(const ImageU8& img) {
  if (img.channels != 1 && img.channels != 3)
    throw ContractError("encode_png: only gray or RGB images are written");
  if (img.width < 1 || img.height < 1)
    throw ContractError("encode_png: empty image");
  if (int64_t(img.pixels.size()) != img.width * img.height * img.channels)
    throw ContractError("encode_png: pixel buffer size mismatch");
  std::vector<uint8_t> out(kPngSignature, kPngSignature + 8);
  uint8_t ihdr[13];
  ihdr[0] = uint8_t(uint32_t(img.width) >> 24);
  ihdr[1] = uint8_t(uint32_t(img.width) >> 16);
  ihdr[2] = uint8_t(uint32_t(img.width) >> 8);
  ihdr[3] = uint8_t(img.width);
  ihdr[4] = uint8_t(uint32_t(img.height) >> 24);
  ihdr[5] = uint8_t(uint32_t(img.height) >> 16);
  ihdr[6] = uint8_t(uint32_t(img.height) >> 8);
  ihdr[7] = uint8_t(img.height);
  ihdr[8] = 8;                                      // bit depth
  ihdr[9] = img.channels == 1 ? 0 : 2;              // color type
  ihdr[10] = ihdr[11] = ihdr[12] = 0;               // compression/filter/interlace
  detail::png_chunk(out, "IHDR", ihdr, 13);

  const int64_t row = img.width * img.channels;
  std::vector<uint8_t> raw(size_t((row + 1) * img.height));
  for (int64_t y = 0; y < img.height; ++y) {
    raw[size_t(y * (row + 1))] = 0;  // filter: none
    std::memcpy(raw.data() + y * (row + 1) + 1, img.pixels.data() + y * row, size_t(row));
  }
  uLongf comp_len = ::compressBound(uLong(raw.size()));
  std::vector<uint8_t> comp(comp_len);
  if (::compress2(comp.data(), &comp_len, raw.data(), uLong(raw.size()), 6) != Z_OK)
    throw IoError("encode_png: deflate failed");
  detail::png_chunk(out, "IDAT", comp.data(), comp_len);
  detail::png_chunk(out, "IEND", nullptr, 0);
  return out;
}

inline void write_png(const std::string& path, const ImageU8& img) {
  const auto bytes = encode_png(img);
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw IoError("write_png: cannot open " + path);
  f.write(reinterpret_cast<const char*>(bytes.data()), std::streamsize(bytes.size()));
  if (!f) throw IoError("write_png: short write to " + path);
}

/// Decode an 8-bit PNG (color types 0/2/4/6, no interlace, no palette).
inline ImageU8 decode_png(const std::vector<uint8_t>& bytes, const std::string& origin = "png") {
  auto fail = [&](const std::string& msg, size_t at) {
    throw FormatError(origin + ": " + msg + " at byte " + std::to_string(at));
  };
  if (bytes.size() < 8 || std::memcmp(bytes.data(), kPngSignature, 8) != 0)
    fail("bad PNG signature", 0);
  size_t at = 8;
  ImageU8 img;
  bool have_ihdr = false;
  std::vector<uint8_t> idat;
  while (true) {
    if (at + 8 > bytes.size()) fail("truncated chunk header", at);
    const uint32_t len = detail::get_u32be(bytes.data() + at);
    if (at + 12 + len > bytes.size()) fail("truncated chunk payload", at);
    char type[5] = {};
    std::memcpy(type, bytes.data() + at + 4, 4);
    const uint8_t* data = bytes.data() + at + 8;
    const uint32_t stored_crc = detail::get_u32be(data + len);
    const uint32_t crc = uint32_t(::crc32(0, bytes.data() + at + 4, uInt(4 + len)));
    if (crc != stored_crc) fail(std::string("chunk CRC mismatch in ") + type, at);
    if (std::strcmp(type, "IHDR") == 0) {
      if (len != 13) fail("IHDR length", at);
      img.width = detail::get_u32be(data);
      img.height = detail::get_u32be(data + 4);
      const int depth = data[8];
      const int color = data[9];
      const int interlace = data[12];
      if (depth != 8) fail("unsupported bit depth " + std::to_string(depth), at);
      if (interlace != 0) fail("interlaced PNG not supported", at);
      switch (color) {
        case 0: img.channels = 1; break;
        case 2: img.channels = 3; break;
        case 4: img.channels = 2; break;
        case 6: img.channels = 4; break;
        case 3: fail("palette PNG not supported", at); break;
        default: fail("unknown color type " + std::to_string(color), at);
      }
      if (img.width < 1 || img.height < 1) fail("empty image", at);
      have_ihdr = true;
    } else if (std::strcmp(type, "IDAT") == 0) {
      if (!have_ihdr) fail("IDAT before IHDR", at);
      idat.insert(idat.end(), data, data + len);
    } else if (std::strcmp(type, "IEND") == 0) {
      break;
    }
    at += 12 + len;
  }
  if (!have_ihdr) fail("missing IHDR", at);
  if (idat.empty()) fail("missing IDAT", at);

  const int64_t row = img.width * img.channels;
  std::vector<uint8_t> raw(size_t((row + 1) * img.height));
  uLongf raw_len = uLongf(raw.size());
  const int zrc = ::uncompress(raw.data(), &raw_len, idat.data(), uLong(idat.size()));
  if (zrc != Z_OK || raw_len != raw.size()) fail("inflate failed on IDAT", at);

  img.pixels.assign(size_t(row * img.height), 0);
  const int bpp = img.channels;
  for (int64_t y = 0; y < img.height; ++y) {
    const uint8_t filter = raw[size_t(y * (row + 1))];
    const uint8_t* src = raw.data() + y * (row + 1) + 1;
    uint8_t* cur = img.pixels.data() + y * row;
    const uint8_t* up = y > 0 ? img.pixels.data() + (y - 1) * row : nullptr;
    for (int64_t x = 0; x < row; ++x) {
      const int left = x >= bpp ? cur[x - bpp] : 0;
      const int above = up ? up[x] : 0;
      const int corner = (up && x >= bpp) ? up[x - bpp] : 0;
      int v = src[x];
      switch (filter) {
        case 0: break;
        case 1: v += left; break;
        case 2: v += above; break;
        case 3: v += (left + above) / 2; break;
        case 4: v += detail::paeth(left, above, corner); break;
        default: fail("unknown filter " + std::to_string(filter), size_t(y));
      }
      cur[x] = uint8_t(v);
    }
  }
  return img;
}

inline ImageU8 read_png(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw IoError("read_png: cannot open " + path);
  std::vector<uint8_t> bytes((std::istreambuf_iterator<char>(f)),
                             std::istreambuf_iterator<char>());
  return decode_png(bytes, path);
}

}  // namespace prnet
