#pragma once

#include <algorithm>
#include <cmath>

#include "prnet/core/tensor.hpp"
#include "prnet/io/png.hpp"

namespace prnet {

/// 8-bit raster -> (1,3,H,W) float in [0,1]. Gray replicates to three
/// channels; alpha, when present, is dropped.
inline Tensor<float> image_to_tensor(const ImageU8& img) {
  Tensor<float> t(Shape(1, 3, img.height, img.width));
  const int color_channels = img.channels >= 3 ? 3 : 1;
  for (int64_t y = 0; y < img.height; ++y)
    for (int64_t x = 0; x < img.width; ++x)
      for (int c = 0; c < 3; ++c) {
        const int src_c = color_channels == 3 ? c : 0;
        t.at(0, c, y, x) = float(img.at(y, x, src_c)) / 255.f;
      }
  return t;
}

/// 8-bit raster -> (1,1,H,W) binary mask, thresholded at 128 on the first
/// channel.
inline Tensor<float> mask_to_tensor(const ImageU8& img) {
  Tensor<float> t(Shape(1, 1, img.height, img.width));
  for (int64_t y = 0; y < img.height; ++y)
    for (int64_t x = 0; x < img.width; ++x)
      t.at(0, 0, y, x) = img.at(y, x, 0) >= 128 ? 1.f : 0.f;
  return t;
}

/// (1,3,H,W) float -> 8-bit RGB; values are clamped to [0,1] here and only
/// here, never inside the loss path.
inline ImageU8 tensor_to_image(const Tensor<float>& t) {
  if (t.shape().n != 1 || t.shape().c != 3)
    throw DimensionError("tensor_to_image: expected 1x3xHxW, got " + t.shape().str());
  ImageU8 img;
  img.width = t.shape().w;
  img.height = t.shape().h;
  img.channels = 3;
  img.pixels.resize(size_t(img.width * img.height * 3));
  for (int64_t y = 0; y < img.height; ++y)
    for (int64_t x = 0; x < img.width; ++x)
      for (int c = 0; c < 3; ++c) {
        const float v = std::clamp(t.at(0, c, y, x), 0.f, 1.f);
        img.at(y, x, c) = uint8_t(std::lround(v * 255.f));
      }
  return img;
}

inline ImageU8 mask_to_image(const Tensor<float>& t) {
  if (t.shape().n != 1 || t.shape().c != 1)
    throw DimensionError("mask_to_image: expected 1x1xHxW, got " + t.shape().str());
  ImageU8 img;
  img.width = t.shape().w;
  img.height = t.shape().h;
  img.channels = 1;
  img.pixels.resize(size_t(img.width * img.height));
  for (int64_t y = 0; y < img.height; ++y)
    for (int64_t x = 0; x < img.width; ++x)
      img.at(y, x, 0) = t.at(0, 0, y, x) >= 0.5f ? 255 : 0;
  return img;
}

/// Bilinear resize of a (1,C,H,W) tensor.
inline Tensor<float> bilinear_resize(const Tensor<float>& src, int64_t out_h, int64_t out_w) {
  const Shape& s = src.shape();
  if (out_h < 1 || out_w < 1) throw ContractError("bilinear_resize: empty target");
  Tensor<float> dst(Shape(s.n, s.c, out_h, out_w));
  const double sy = double(s.h) / double(out_h);
  const double sx = double(s.w) / double(out_w);
  for (int64_t n = 0; n < s.n; ++n)
    for (int64_t c = 0; c < s.c; ++c)
      for (int64_t y = 0; y < out_h; ++y)
        for (int64_t x = 0; x < out_w; ++x) {
          const double fy = (double(y) + 0.5) * sy - 0.5;
          const double fx = (double(x) + 0.5) * sx - 0.5;
          const int64_t y0 = std::clamp<int64_t>(int64_t(std::floor(fy)), 0, s.h - 1);
          const int64_t x0 = std::clamp<int64_t>(int64_t(std::floor(fx)), 0, s.w - 1);
          const int64_t y1 = std::min<int64_t>(y0 + 1, s.h - 1);
          const int64_t x1 = std::min<int64_t>(x0 + 1, s.w - 1);
          const double wy = std::clamp(fy - double(y0), 0.0, 1.0);
          const double wx = std::clamp(fx - double(x0), 0.0, 1.0);
          const double v00 = src.at(n, c, y0, x0), v01 = src.at(n, c, y0, x1);
          const double v10 = src.at(n, c, y1, x0), v11 = src.at(n, c, y1, x1);
          dst.at(n, c, y, x) =
              float((1 - wy) * ((1 - wx) * v00 + wx * v01) + wy * ((1 - wx) * v10 + wx * v11));
        }
  return dst;
}

}  // namespace prnet
