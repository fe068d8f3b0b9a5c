#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "prnet/model/params.hpp"

namespace prnet {

struct ParamReport {
  int64_t extractor = 0;
  int64_t reintegration = 0;
  int64_t gru = 0;
  int64_t tail = 0;
  int64_t total = 0;
};

/// Exact count of learnable scalars, grouped by module.
template <typename T>
ParamReport count_params_report(ModelParams<T>& params) {
  ParamReport r;
  params.visit([&](const std::string& name, Tensor<T>& t) {
    const int64_t n = t.size();
    r.total += n;
    if (name.starts_with("extractor"))
      r.extractor += n;
    else if (name.find(".reint.") != std::string::npos)
      r.reintegration += n;
    else if (name.find(".gru.") != std::string::npos)
      r.gru += n;
    else if (name.find(".tail.") != std::string::npos)
      r.tail += n;
  });
  return r;
}

template <typename T>
int64_t count_params(ModelParams<T>& params) {
  return count_params_report(params).total;
}

struct FlopReport {
  double fixed = 0;     // extractor, run once
  double per_iter = 0;  // re-integration + GRU + tail, run every iteration
  double total(int iterations) const { return fixed + per_iter * iterations; }
};

namespace detail {

// One MAC counts as one FLOP: the convention behind the published
// per-resolution figures this estimate is compared against.
inline double conv_macs(int64_t cout, int64_t cin, int64_t k, int64_t h, int64_t w) {
  return double(cout) * double(cin) * double(k * k) * double(h) * double(w);
}

}  // namespace detail

/// Analytic multiply-accumulate estimate at the given resolution. All convs
/// are stride 1 with same-padding, so every layer works at H x W.
inline FlopReport count_flops_report(const ModelConfig& cfg, int64_t h, int64_t w) {
  if (h < 1 || w < 1) throw ContractError("count_flops: dimensions must be positive");
  using detail::conv_macs;
  FlopReport r;
  // extractor
  r.fixed += conv_macs(cfg.stem, 4, 7, h, w);
  auto layer = [&](int cin, int cout) {
    r.fixed += conv_macs(cout, cin, 3, h, w) + conv_macs(cout, cout, 3, h, w);
    if (cin != cout) r.fixed += conv_macs(cout, cin, 1, h, w);  // skip projection
    r.fixed += 2 * conv_macs(cout, cout, 3, h, w);
  };
  layer(cfg.stem, cfg.layer1);
  layer(cfg.layer1, cfg.layer2);
  layer(cfg.layer2, cfg.layer3);
  r.fixed += conv_macs(cfg.layer3, cfg.layer3, 1, h, w);
  // per-iteration machinery
  const int c = cfg.hidden();
  if (cfg.use_reintegration) {
    r.per_iter += conv_macs(cfg.reint_s, 4, 3, h, w);
    r.per_iter += conv_macs(cfg.reint_l, c, 1, h, w);
    r.per_iter += conv_macs(c, cfg.reint_s + cfg.reint_l, 3, h, w);
  }
  if (cfg.use_update) r.per_iter += 3 * conv_macs(c, 2 * c, 3, h, w);
  r.per_iter += conv_macs(cfg.tail_mid, c, 3, h, w);
  r.per_iter += conv_macs(3, cfg.tail_mid, 3, h, w);
  return r;
}

inline double count_flops(const ModelConfig& cfg, int64_t h, int64_t w, int iterations) {
  return count_flops_report(cfg, h, w).total(iterations);
}

}  // namespace prnet
