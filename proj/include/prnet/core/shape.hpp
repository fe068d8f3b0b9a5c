#pragma once

#include <cstdint>
#include <string>

#include "prnet/core/errors.hpp"

namespace prnet {

/// Dense 4-D extent (batch, channel, height, width), W fastest.
struct Shape {
  int64_t n = 0;
  int64_t c = 0;
  int64_t h = 0;
  int64_t w = 0;

  Shape() = default;
  Shape(int64_t n_, int64_t c_, int64_t h_, int64_t w_) : n(n_), c(c_), h(h_), w(w_) {
    if (n < 0 || c < 0 || h < 0 || w < 0) throw DimensionError("negative shape extent: " + str());
  }

  int64_t numel() const { return n * c * h * w; }
  int64_t plane() const { return h * w; }

  bool operator==(const Shape& o) const = default;

  std::string str() const {
    return std::to_string(n) + "x" + std::to_string(c) + "x" + std::to_string(h) + "x" +
           std::to_string(w);
  }
};

inline int64_t flat_index(const Shape& s, int64_t n, int64_t c, int64_t y, int64_t x) {
  return ((n * s.c + c) * s.h + y) * s.w + x;
}

}  // namespace prnet
