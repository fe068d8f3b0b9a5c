#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include "prnet/core/rng.hpp"
#include "prnet/core/tensor.hpp"
#include "prnet/io/image.hpp"

namespace prnet {

/// One aligned training triplet.
struct ShadowSample {
  Tensor<float> shadow;  // (1,3,H,W)
  Tensor<float> free;    // (1,3,H,W)
  Tensor<float> mask;    // (1,1,H,W), binary
};

/// Knobs of the synthetic shadow generator. All ranges are sampled per
/// sample; the generator keeps shadow == free bitwise outside the mask.
struct SynthConfig {
  int polygons_min = 1;
  int polygons_max = 3;
  double area_min = 0.05;
  double area_max = 0.40;
  double alpha_min = 0.2;
  double alpha_max = 0.7;
  double channel_jitter = 0.05;
  double feather_px = 2.0;
};

namespace detail {

struct ConvexPolygon {
  std::vector<double> xs, ys;

  // Distance to the boundary, positive inside. Orientation-normalized so
  // callers never care about winding.
  double inside_distance(double px, double py) const {
    const size_t n = xs.size();
    double area2 = 0;
    for (size_t i = 0; i < n; ++i) {
      const size_t j = (i + 1) % n;
      area2 += xs[i] * ys[j] - xs[j] * ys[i];
    }
    const double sign = area2 >= 0 ? 1.0 : -1.0;
    double d = 1e30;
    for (size_t i = 0; i < n; ++i) {
      const size_t j = (i + 1) % n;
      const double ex = xs[j] - xs[i], ey = ys[j] - ys[i];
      const double len = std::sqrt(ex * ex + ey * ey);
      if (len < 1e-12) continue;
      const double cross = ex * (py - ys[i]) - ey * (px - xs[i]);
      d = std::min(d, sign * cross / len);
    }
    return d;
  }
};

inline ConvexPolygon random_polygon(Rng& rng, int64_t h, int64_t w, double target_frac) {
  ConvexPolygon poly;
  const double cx = rng.uniform(0.25, 0.75) * double(w);
  const double cy = rng.uniform(0.25, 0.75) * double(h);
  // radial polygon over jittered-regular angles covers about 1.4 R^2
  double radius = std::sqrt(std::max(1e-6, target_frac) * double(h * w) / 1.4);
  radius = std::clamp(radius, 2.5, double(std::min(h, w)) / 2.0);
  const int nv = int(rng.uniform_int(4, 7));
  for (int i = 0; i < nv; ++i) {
    const double a = 6.283185307179586 * (double(i) + rng.uniform(0.0, 0.6)) / double(nv);
    const double r = radius * rng.uniform(0.7, 1.0);
    poly.xs.push_back(cx + r * std::cos(a));
    poly.ys.push_back(cy + r * std::sin(a));
  }
  return poly;
}

}  // namespace detail

/// Procedural shadow-free base: per-channel affine gradient, a few soft
/// blobs and a faint sinusoid, clamped into (0,1).
inline Tensor<float> synth_base(int64_t h, int64_t w, Rng& rng) {
  Tensor<float> img(Shape(1, 3, h, w));
  double c0[3], gx[3], gy[3], amp[3], fx[3], fy[3], ph[3];
  for (int c = 0; c < 3; ++c) {
    c0[c] = rng.uniform(0.2, 0.8);
    gx[c] = rng.uniform(-0.35, 0.35);
    gy[c] = rng.uniform(-0.35, 0.35);
    amp[c] = rng.uniform(0.005, 0.02);
    fx[c] = rng.uniform(1.0, 4.0);
    fy[c] = rng.uniform(1.0, 4.0);
    ph[c] = rng.uniform(0.0, 6.28);
  }
  struct Blob {
    double x, y, sigma, delta[3];
  };
  std::vector<Blob> blobs(size_t(rng.uniform_int(2, 5)));
  for (auto& b : blobs) {
    b.x = rng.uniform(0.0, double(w));
    b.y = rng.uniform(0.0, double(h));
    b.sigma = rng.uniform(0.08, 0.25) * double(std::min(h, w));
    for (int c = 0; c < 3; ++c) b.delta[c] = rng.uniform(-0.25, 0.25);
  }
  for (int64_t y = 0; y < h; ++y)
    for (int64_t x = 0; x < w; ++x) {
      const double u = double(x) / double(w) - 0.5;
      const double v = double(y) / double(h) - 0.5;
      for (int c = 0; c < 3; ++c) {
        double val = c0[c] + gx[c] * u + gy[c] * v +
                     amp[c] * std::sin(6.283185307179586 * (fx[c] * u + fy[c] * v) + ph[c]);
        for (const auto& b : blobs) {
          const double dx = double(x) - b.x, dy = double(y) - b.y;
          val += b.delta[c] * std::exp(-(dx * dx + dy * dy) / (2 * b.sigma * b.sigma));
        }
        img.at(0, c, y, x) = float(std::clamp(val, 0.02, 0.98));
      }
    }
  return img;
}

/// Paints a synthetic shadow onto a shadow-free image: the mask is a union
/// of random convex polygons, attenuation alpha is per-sample with a mild
/// per-channel jitter, and edges are feathered inside the mask over
/// feather_px. Outside the mask the shadow equals the base bitwise.
inline ShadowSample synth_shadow(const Tensor<float>& base, Rng& rng,
                                 const SynthConfig& cfg = {}) {
  const Shape& s = base.shape();
  ShadowSample out;
  out.free = base;
  out.shadow = base.clone();
  out.mask = Tensor<float>::zeros(Shape(1, 1, s.h, s.w));

  const int npoly = int(rng.uniform_int(cfg.polygons_min, cfg.polygons_max));
  const double frac = rng.uniform(cfg.area_min, cfg.area_max);
  std::vector<detail::ConvexPolygon> polys;
  for (int i = 0; i < npoly; ++i)
    polys.push_back(detail::random_polygon(rng, s.h, s.w, frac / npoly));

  const double alpha = rng.uniform(cfg.alpha_min, cfg.alpha_max);
  double alpha_c[3];
  for (int c = 0; c < 3; ++c)
    alpha_c[c] = std::clamp(alpha + rng.uniform(-cfg.channel_jitter, cfg.channel_jitter), 0.02,
                            1.0);

  bool any = false;
  for (int64_t y = 0; y < s.h; ++y)
    for (int64_t x = 0; x < s.w; ++x) {
      double d = -1e30;
      for (const auto& p : polys)
        d = std::max(d, p.inside_distance(double(x) + 0.5, double(y) + 0.5));
      if (d <= 0) continue;  // untouched outside the mask
      any = true;
      out.mask.at(0, 0, y, x) = 1.f;
      const double wgt = cfg.feather_px > 0 ? std::min(1.0, d / cfg.feather_px) : 1.0;
      for (int c = 0; c < 3; ++c) {
        const double factor = 1.0 - (1.0 - alpha_c[c]) * wgt;
        out.shadow.at(0, c, y, x) = float(double(out.free.at(0, c, y, x)) * factor);
      }
    }
  if (!any) {
    // degenerate raster (possible for tiny targets): mark the center pixel
    const int64_t cy = s.h / 2, cx = s.w / 2;
    out.mask.at(0, 0, cy, cx) = 1.f;
    for (int c = 0; c < 3; ++c)
      out.shadow.at(0, c, cy, cx) = float(double(out.free.at(0, c, cy, cx)) * alpha_c[c]);
  }
  return out;
}

/// Identical crop window applied to shadow, free and mask. Images smaller
/// than the crop are bilinearly upscaled first (masks re-thresholded).
inline ShadowSample random_crop_pair(const ShadowSample& sample, int64_t crop, Rng& rng) {
  ShadowSample src = sample;
  const Shape& s = src.shadow.shape();
  if (s.h < crop || s.w < crop) {
    const double scale = std::max(double(crop) / double(s.h), double(crop) / double(s.w));
    const int64_t nh = std::max<int64_t>(crop, int64_t(std::ceil(double(s.h) * scale)));
    const int64_t nw = std::max<int64_t>(crop, int64_t(std::ceil(double(s.w) * scale)));
    src.shadow = bilinear_resize(src.shadow, nh, nw);
    src.free = bilinear_resize(src.free, nh, nw);
    src.mask = bilinear_resize(src.mask, nh, nw);
    for (int64_t i = 0; i < src.mask.size(); ++i)
      src.mask.data()[i] = src.mask.data()[i] >= 0.5f ? 1.f : 0.f;
  }
  const Shape& rs = src.shadow.shape();
  const int64_t oy = rs.h == crop ? 0 : rng.uniform_int(0, rs.h - crop);
  const int64_t ox = rs.w == crop ? 0 : rng.uniform_int(0, rs.w - crop);
  auto window = [&](const Tensor<float>& t) {
    Tensor<float> out(Shape(1, t.shape().c, crop, crop));
    for (int64_t c = 0; c < t.shape().c; ++c)
      for (int64_t y = 0; y < crop; ++y)
        for (int64_t x = 0; x < crop; ++x) out.at(0, c, y, x) = t.at(0, c, oy + y, ox + x);
    return out;
  };
  ShadowSample out;
  out.shadow = window(src.shadow);
  out.free = window(src.free);
  out.mask = window(src.mask);
  return out;
}

inline ShadowSample hflip_sample(const ShadowSample& sample) {
  auto flip = [](const Tensor<float>& t) {
    Tensor<float> out(t.shape());
    const Shape& s = t.shape();
    for (int64_t c = 0; c < s.c; ++c)
      for (int64_t y = 0; y < s.h; ++y)
        for (int64_t x = 0; x < s.w; ++x) out.at(0, c, y, x) = t.at(0, c, y, s.w - 1 - x);
    return out;
  };
  return ShadowSample{flip(sample.shadow), flip(sample.free), flip(sample.mask)};
}

/// Deterministic synthetic dataset: sample i only depends on (seed, i).
inline std::vector<ShadowSample> synth_dataset(int count, int64_t size, uint64_t seed,
                                               const SynthConfig& cfg = {}) {
  std::vector<ShadowSample> out;
  out.reserve(size_t(count));
  for (int i = 0; i < count; ++i) {
    Rng rng = Rng::stream(seed, 0x5348444f57ULL + uint64_t(i));
    auto base = synth_base(size, size, rng);
    out.push_back(synth_shadow(base, rng, cfg));
  }
  return out;
}

}  // namespace prnet
