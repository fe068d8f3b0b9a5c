#pragma once

#include <array>
#include <cmath>
#include <string>
#include <vector>

#include "prnet/core/ops.hpp"
#include "prnet/model/config.hpp"

namespace prnet {

template <typename T>
struct Conv {
  Tensor<T> w;  // (cout, cin, k, k)
  Tensor<T> b;  // (1, cout, 1, 1)
  int stride = 1;
  int pad = 0;

  int64_t out_channels() const { return w.shape().n; }

  template <typename F>
  void visit(const std::string& prefix, F&& f) {
    f(prefix + ".w", w);
    f(prefix + ".b", b);
  }
};

template <typename T>
struct Norm {
  Tensor<T> scale;  // (1, c, 1, 1)
  Tensor<T> shift;  // (1, c, 1, 1)

  template <typename F>
  void visit(const std::string& prefix, F&& f) {
    f(prefix + ".scale", scale);
    f(prefix + ".shift", shift);
  }
};

template <typename T>
struct ConvNorm {
  Conv<T> conv;
  Norm<T> norm;

  template <typename F>
  void visit(const std::string& prefix, F&& f) {
    conv.visit(prefix, f);
    norm.visit(prefix + ".norm", f);
  }
};

/// ResNet basic block: conv-norm-relu-conv-norm, identity skip, final relu.
/// Channel transitions route the skip through a 1x1 projection with norm.
template <typename T>
struct ResidualBlock {
  ConvNorm<T> c1;
  ConvNorm<T> c2;
  bool has_proj = false;
  ConvNorm<T> proj;

  template <typename F>
  void visit(const std::string& prefix, F&& f) {
    c1.visit(prefix + ".c1", f);
    c2.visit(prefix + ".c2", f);
    if (has_proj) proj.visit(prefix + ".proj", f);
  }
};

template <typename T>
struct ExtractorParams {
  ConvNorm<T> conv1;  // 7x7 stem over (image, mask)
  std::array<ResidualBlock<T>, 2> layer1;
  std::array<ResidualBlock<T>, 2> layer2;
  std::array<ResidualBlock<T>, 2> layer3;
  ConvNorm<T> conv2;  // trailing 1x1

  template <typename F>
  void visit(const std::string& prefix, F&& f) {
    conv1.visit(prefix + ".conv1", f);
    for (int i = 0; i < 2; ++i) layer1[size_t(i)].visit(prefix + ".layer1." + std::to_string(i), f);
    for (int i = 0; i < 2; ++i) layer2[size_t(i)].visit(prefix + ".layer2." + std::to_string(i), f);
    for (int i = 0; i < 2; ++i) layer3[size_t(i)].visit(prefix + ".layer3." + std::to_string(i), f);
    conv2.visit(prefix + ".conv2", f);
  }
};

template <typename T>
struct ReintegrationParams {
  ConvNorm<T> conv_s;  // concat(I_prev, mask) -> C1
  ConvNorm<T> conv_l;  // h_prev -> C2 (1x1 squeeze)
  ConvNorm<T> conv_r;  // concat(F_s, F_l) -> C

  template <typename F>
  void visit(const std::string& prefix, F&& f) {
    conv_s.visit(prefix + ".conv_s", f);
    conv_l.visit(prefix + ".conv_l", f);
    conv_r.visit(prefix + ".conv_r", f);
  }
};

template <typename T>
struct GruParams {
  Conv<T> wz;
  Conv<T> wr;
  Conv<T> wh;

  template <typename F>
  void visit(const std::string& prefix, F&& f) {
    wz.visit(prefix + ".wz", f);
    wr.visit(prefix + ".wr", f);
    wh.visit(prefix + ".wh", f);
  }
};

template <typename T>
struct TailParams {
  Conv<T> conv_a;  // C -> tail_mid, relu
  Conv<T> conv_b;  // tail_mid -> 3, linear

  template <typename F>
  void visit(const std::string& prefix, F&& f) {
    conv_a.visit(prefix + ".conv_a", f);
    conv_b.visit(prefix + ".conv_b", f);
  }
};

/// One copy of the per-iteration machinery. The shared-update model owns a
/// single instance reused every iteration; the independent-parameters
/// ablation owns train_iterations of them.
template <typename T>
struct IterationParams {
  ReintegrationParams<T> reint;
  GruParams<T> gru;
  TailParams<T> tail;

  template <typename F>
  void visit(const std::string& prefix, F&& f, bool with_reint, bool with_gru) {
    if (with_reint) reint.visit(prefix + ".reint", f);
    if (with_gru) gru.visit(prefix + ".gru", f);
    tail.visit(prefix + ".tail", f);
  }
};

template <typename T>
struct ModelParams {
  ModelConfig cfg;
  ExtractorParams<T> extractor;
  std::vector<IterationParams<T>> iter;

  const IterationParams<T>& block(int k) const {
    if (cfg.shared_update) return iter[0];
    const size_t i = size_t(std::min<int>(k, int(iter.size()) - 1));
    return iter[i];
  }

  /// Canonical enumeration of every learnable tensor; serialization,
  /// optimizer state and parameter counting all share this order.
  template <typename F>
  void visit(F&& f) {
    extractor.visit("extractor", f);
    for (size_t i = 0; i < iter.size(); ++i)
      iter[i].visit("iter" + std::to_string(i), f, cfg.use_reintegration, cfg.use_update);
  }
};

namespace detail {

/// Fan-in scaled uniform init, bound sqrt(1/(cin*k^2)); biases zero,
/// norm scale 1, shift 0.
template <typename T>
Conv<T> make_conv(int cout, int cin, int k, int stride, int pad, Rng& rng) {
  Conv<T> c;
  const double bound = std::sqrt(1.0 / (double(cin) * k * k));
  c.w = Tensor<T>::uniform(Shape(cout, cin, k, k), rng, T(-bound), T(bound));
  c.b = Tensor<T>::zeros(Shape(1, cout, 1, 1));
  c.stride = stride;
  c.pad = pad;
  return c;
}

template <typename T>
Norm<T> make_norm(int c) {
  Norm<T> n;
  n.scale = Tensor<T>::full(Shape(1, c, 1, 1), T(1));
  n.shift = Tensor<T>::zeros(Shape(1, c, 1, 1));
  return n;
}

template <typename T>
ConvNorm<T> make_conv_norm(int cout, int cin, int k, int stride, int pad, Rng& rng) {
  return ConvNorm<T>{make_conv<T>(cout, cin, k, stride, pad, rng), make_norm<T>(cout)};
}

template <typename T>
ResidualBlock<T> make_block(int cin, int cout, Rng& rng) {
  ResidualBlock<T> b;
  b.c1 = make_conv_norm<T>(cout, cin, 3, 1, 1, rng);
  b.c2 = make_conv_norm<T>(cout, cout, 3, 1, 1, rng);
  b.has_proj = (cin != cout);
  if (b.has_proj) b.proj = make_conv_norm<T>(cout, cin, 1, 1, 0, rng);
  return b;
}

template <typename T>
IterationParams<T> make_iteration(const ModelConfig& cfg, Rng& rng) {
  IterationParams<T> p;
  const int c = cfg.hidden();
  p.reint.conv_s = make_conv_norm<T>(cfg.reint_s, 4, 3, 1, 1, rng);
  p.reint.conv_l = make_conv_norm<T>(cfg.reint_l, c, 1, 1, 0, rng);
  p.reint.conv_r = make_conv_norm<T>(c, cfg.reint_s + cfg.reint_l, 3, 1, 1, rng);
  p.gru.wz = make_conv<T>(c, 2 * c, 3, 1, 1, rng);
  p.gru.wr = make_conv<T>(c, 2 * c, 3, 1, 1, rng);
  p.gru.wh = make_conv<T>(c, 2 * c, 3, 1, 1, rng);
  p.tail.conv_a = make_conv<T>(cfg.tail_mid, c, 3, 1, 1, rng);
  p.tail.conv_b = make_conv<T>(3, cfg.tail_mid, 3, 1, 1, rng);
  return p;
}

}  // namespace detail

template <typename T>
ModelParams<T> init_model(const ModelConfig& cfg, uint64_t seed) {
  cfg.validate();
  Rng rng = Rng::stream(seed, 0x6d6f64656cULL);
  ModelParams<T> p;
  p.cfg = cfg;
  p.extractor.conv1 = detail::make_conv_norm<T>(cfg.stem, 4, 7, 1, 3, rng);
  p.extractor.layer1 = {detail::make_block<T>(cfg.stem, cfg.layer1, rng),
                        detail::make_block<T>(cfg.layer1, cfg.layer1, rng)};
  p.extractor.layer2 = {detail::make_block<T>(cfg.layer1, cfg.layer2, rng),
                        detail::make_block<T>(cfg.layer2, cfg.layer2, rng)};
  p.extractor.layer3 = {detail::make_block<T>(cfg.layer2, cfg.layer3, rng),
                        detail::make_block<T>(cfg.layer3, cfg.layer3, rng)};
  p.extractor.conv2 = detail::make_conv_norm<T>(cfg.layer3, cfg.layer3, 1, 1, 0, rng);
  const int copies = cfg.shared_update ? 1 : cfg.train_iterations;
  for (int i = 0; i < copies; ++i) p.iter.push_back(detail::make_iteration<T>(cfg, rng));
  p.visit([](const std::string&, Tensor<T>& t) { t.set_learnable(true); });
  return p;
}

/// Deep copy into another scalar type (used by the 64-bit oracle path).
template <typename To, typename From>
ModelParams<To> cast_model(ModelParams<From>& src) {
  ModelParams<To> dst = init_model<To>(src.cfg, 0);
  std::vector<Tensor<From>*> from;
  src.visit([&](const std::string&, Tensor<From>& t) { from.push_back(&t); });
  size_t i = 0;
  dst.visit([&](const std::string&, Tensor<To>& t) {
    Tensor<To> c = cast<To>(*from[i++]);
    c.set_learnable(true);
    t = c;
  });
  return dst;
}

}  // namespace prnet
