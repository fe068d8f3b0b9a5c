#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <string>
#include <vector>

#include "prnet/core/tensor.hpp"
#include "prnet/metrics/color.hpp"

namespace prnet {

enum class Region { Shadow, NonShadow, All };

inline const char* region_name(Region r) {
  switch (r) {
    case Region::Shadow: return "shadow";
    case Region::NonShadow: return "non_shadow";
    default: return "all";
  }
}

struct MetricReport {
  Region region = Region::All;
  double psnr = 0;
  double ssim = 0;
  double rmse_lab = 0;
};

namespace detail {

inline void require_image(const Tensor<float>& t, const char* what) {
  if (t.shape().n != 1 || t.shape().c != 3)
    throw DimensionError(std::string(what) + ": expected 1x3xHxW image, got " +
                         t.shape().str());
}

inline void require_pair(const Tensor<float>& a, const Tensor<float>& b) {
  require_image(a, "metrics");
  require_image(b, "metrics");
  if (!(a.shape() == b.shape()))
    throw DimensionError("metrics: shape mismatch " + a.shape().str() + " vs " +
                         b.shape().str());
}

inline bool pixel_selected(Region region, const Tensor<float>* mask, int64_t y, int64_t x) {
  if (region == Region::All) return true;
  const bool in_mask = mask->at(0, 0, y, x) >= 0.5f;
  return region == Region::Shadow ? in_mask : !in_mask;
}

inline void require_mask(Region region, const Tensor<float>* mask, const Shape& s) {
  if (region == Region::All) return;
  if (!mask || !mask->valid())
    throw ContractError("metrics: region selection requires a mask");
  if (mask->shape().h != s.h || mask->shape().w != s.w || mask->shape().c != 1)
    throw DimensionError("metrics: mask shape " + mask->shape().str() +
                         " does not match image " + s.str());
}

// Edge-inclusive mirror fold for SSIM padding.
inline int64_t mirror(int64_t i, int64_t n) {
  while (i < 0 || i >= n) {
    if (i < 0) i = -i - 1;
    if (i >= n) i = 2 * n - i - 1;
  }
  return i;
}

struct SsimWindows {
  static constexpr int kRadius = 5;
  std::array<double, 11> kernel{};
  SsimWindows() {
    double sum = 0;
    for (int i = 0; i < 11; ++i) {
      const double d = i - kRadius;
      kernel[size_t(i)] = std::exp(-d * d / (2.0 * 1.5 * 1.5));
      sum += kernel[size_t(i)];
    }
    for (auto& v : kernel) v /= sum;
  }
};

// Separable Gaussian blur with symmetric padding, double precision.
inline std::vector<double> gauss_filter(const std::vector<double>& src, int64_t h, int64_t w) {
  static const SsimWindows win;
  constexpr int R = SsimWindows::kRadius;
  std::vector<double> tmp(size_t(h * w)), dst(size_t(h * w));
  for (int64_t y = 0; y < h; ++y)
    for (int64_t x = 0; x < w; ++x) {
      double acc = 0;
      for (int t = -R; t <= R; ++t)
        acc += win.kernel[size_t(t + R)] * src[size_t(y * w + mirror(x + t, w))];
      tmp[size_t(y * w + x)] = acc;
    }
  for (int64_t y = 0; y < h; ++y)
    for (int64_t x = 0; x < w; ++x) {
      double acc = 0;
      for (int t = -R; t <= R; ++t)
        acc += win.kernel[size_t(t + R)] * tmp[size_t(mirror(y + t, h) * w + x)];
      dst[size_t(y * w + x)] = acc;
    }
  return dst;
}

}  // namespace detail

/// 10*log10(1/MSE) over the selected pixels of all three channels, capped at
/// 100 dB so identical images stay finite in aggregates.
inline double psnr(const Tensor<float>& a, const Tensor<float>& b,
                   const Tensor<float>* mask = nullptr, Region region = Region::All) {
  detail::require_pair(a, b);
  detail::require_mask(region, mask, a.shape());
  const Shape& s = a.shape();
  double mse = 0;
  int64_t count = 0;
  for (int64_t y = 0; y < s.h; ++y)
    for (int64_t x = 0; x < s.w; ++x) {
      if (!detail::pixel_selected(region, mask, y, x)) continue;
      for (int64_t c = 0; c < 3; ++c) {
        const double d = double(a.at(0, c, y, x)) - double(b.at(0, c, y, x));
        mse += d * d;
      }
      ++count;
    }
  if (count == 0)
    throw ContractError(std::string("psnr: empty region ") + region_name(region));
  mse /= double(3 * count);
  if (mse <= 0) return 100.0;
  return std::min(100.0, 10.0 * std::log10(1.0 / mse));
}

/// Mean local SSIM on BT.601 luma: 11x11 Gaussian window (sigma 1.5),
/// K1=0.01, K2=0.03, L=1. Every pixel centers a window (symmetric padding);
/// region selection restricts which centers contribute.
inline double ssim(const Tensor<float>& a, const Tensor<float>& b,
                   const Tensor<float>* mask = nullptr, Region region = Region::All) {
  detail::require_pair(a, b);
  detail::require_mask(region, mask, a.shape());
  const Shape& s = a.shape();
  if (s.h < 11 || s.w < 11)
    throw DimensionError("ssim: image smaller than the 11x11 window: " + s.str());
  const size_t hw = size_t(s.h * s.w);
  auto luma_plane = [](const Tensor<float>& img) {
    const Shape& s = img.shape();
    std::vector<double> out(size_t(s.h * s.w));
    for (int64_t y = 0; y < s.h; ++y)
      for (int64_t x = 0; x < s.w; ++x)
        out[size_t(y * s.w + x)] =
            srgb_luma601(img.at(0, 0, y, x), img.at(0, 1, y, x), img.at(0, 2, y, x));
    return out;
  };
  const auto ya = luma_plane(a);
  const auto yb = luma_plane(b);
  std::vector<double> aa(hw), bb(hw), ab(hw);
  for (size_t i = 0; i < hw; ++i) {
    aa[i] = ya[i] * ya[i];
    bb[i] = yb[i] * yb[i];
    ab[i] = ya[i] * yb[i];
  }
  const auto mu_a = detail::gauss_filter(ya, s.h, s.w);
  const auto mu_b = detail::gauss_filter(yb, s.h, s.w);
  const auto m_aa = detail::gauss_filter(aa, s.h, s.w);
  const auto m_bb = detail::gauss_filter(bb, s.h, s.w);
  const auto m_ab = detail::gauss_filter(ab, s.h, s.w);
  constexpr double c1 = 0.01 * 0.01;
  constexpr double c2 = 0.03 * 0.03;
  double acc = 0;
  int64_t count = 0;
  for (int64_t y = 0; y < s.h; ++y)
    for (int64_t x = 0; x < s.w; ++x) {
      if (!detail::pixel_selected(region, mask, y, x)) continue;
      const size_t i = size_t(y * s.w + x);
      const double va = m_aa[i] - mu_a[i] * mu_a[i];
      const double vb = m_bb[i] - mu_b[i] * mu_b[i];
      const double cov = m_ab[i] - mu_a[i] * mu_b[i];
      acc += ((2 * mu_a[i] * mu_b[i] + c1) * (2 * cov + c2)) /
             ((mu_a[i] * mu_a[i] + mu_b[i] * mu_b[i] + c1) * (va + vb + c2));
      ++count;
    }
  if (count == 0)
    throw ContractError(std::string("ssim: empty region ") + region_name(region));
  return acc / double(count);
}

namespace detail {

// One shared conversion path for both operands, so identical images yield
// bitwise-identical LAB planes regardless of FP contraction choices.
inline std::vector<double> lab_planes(const Tensor<float>& img) {
  const Shape& s = img.shape();
  std::vector<double> out(size_t(3 * s.h * s.w));
  size_t i = 0;
  for (int64_t y = 0; y < s.h; ++y)
    for (int64_t x = 0; x < s.w; ++x) {
      double l, a, b;
      srgb_to_lab(img.at(0, 0, y, x), img.at(0, 1, y, x), img.at(0, 2, y, x), l, a, b);
      out[i++] = l;
      out[i++] = a;
      out[i++] = b;
    }
  return out;
}

}  // namespace detail

/// LAB-space error over the selected pixels. Default is the benchmark
/// family's convention: per-pixel mean absolute deviation across the three
/// LAB channels, averaged over pixels. true_rmse switches to
/// sqrt(mean of squared per-channel deviations) for sensitivity analysis.
inline double rmse_lab(const Tensor<float>& a, const Tensor<float>& b,
                       const Tensor<float>* mask = nullptr, Region region = Region::All,
                       bool true_rmse = false) {
  detail::require_pair(a, b);
  detail::require_mask(region, mask, a.shape());
  const Shape& s = a.shape();
  const auto lab_a = detail::lab_planes(a);
  const auto lab_b = detail::lab_planes(b);
  double acc = 0;
  int64_t count = 0;
  for (int64_t y = 0; y < s.h; ++y)
    for (int64_t x = 0; x < s.w; ++x) {
      if (!detail::pixel_selected(region, mask, y, x)) continue;
      const size_t i = size_t(3 * (y * s.w + x));
      const double dl = lab_a[i] - lab_b[i];
      const double da = lab_a[i + 1] - lab_b[i + 1];
      const double db = lab_a[i + 2] - lab_b[i + 2];
      acc += true_rmse ? (dl * dl + da * da + db * db) / 3.0
                       : (std::abs(dl) + std::abs(da) + std::abs(db)) / 3.0;
      ++count;
    }
  if (count == 0)
    throw ContractError(std::string("rmse_lab: empty region ") + region_name(region));
  const double mean = acc / double(count);
  return true_rmse ? std::sqrt(mean) : mean;
}

/// The paper's full battery: shadow region, non-shadow region, whole image.
inline std::array<MetricReport, 3> evaluate(const Tensor<float>& pred, const Tensor<float>& gt,
                                            const Tensor<float>& mask) {
  std::array<MetricReport, 3> out;
  const Region regions[3] = {Region::Shadow, Region::NonShadow, Region::All};
  for (int i = 0; i < 3; ++i) {
    MetricReport r;
    r.region = regions[i];
    r.psnr = psnr(pred, gt, &mask, regions[i]);
    r.ssim = ssim(pred, gt, &mask, regions[i]);
    r.rmse_lab = rmse_lab(pred, gt, &mask, regions[i]);
    out[size_t(i)] = r;
  }
  return out;
}

}  // namespace prnet
