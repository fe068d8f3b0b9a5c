#pragma once

#include <cmath>

namespace prnet {

/// sRGB in [0,1] -> CIELAB against the D65 white point (Xn, Yn, Zn below).
/// White maps to L*=100, a*=b*=0; black to L*=0.
inline void srgb_to_lab(double r, double g, double b, double& L, double& A, double& B) {
  auto linear = [](double c) {
    return c <= 0.04045 ? c / 12.92 : std::pow((c + 0.055) / 1.055, 2.4);
  };
  const double rl = linear(r);
  const double gl = linear(g);
  const double bl = linear(b);
  const double x = 0.4124564 * rl + 0.3575761 * gl + 0.1804375 * bl;
  const double y = 0.2126729 * rl + 0.7151522 * gl + 0.0721750 * bl;
  const double z = 0.0193339 * rl + 0.1191920 * gl + 0.9503041 * bl;
  auto f = [](double t) {
    constexpr double d = 6.0 / 29.0;
    return t > d * d * d ? std::cbrt(t) : t / (3 * d * d) + 4.0 / 29.0;
  };
  const double fx = f(x / 0.95047);
  const double fy = f(y / 1.0);
  const double fz = f(z / 1.08883);
  L = 116.0 * fy - 16.0;
  A = 500.0 * (fx - fy);
  B = 200.0 * (fy - fz);
}

inline double srgb_luma601(double r, double g, double b) {
  return 0.299 * r + 0.587 * g + 0.114 * b;
}

}  // namespace prnet
