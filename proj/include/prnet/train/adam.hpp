#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "prnet/model/params.hpp"

namespace prnet {

/// Adam with the canonical constants; moment buffers follow the model's
/// canonical visit order.
struct AdamState {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  int64_t step = 0;
  std::vector<Tensor<float>> m;
  std::vector<Tensor<float>> v;
};

inline AdamState init_adam(ModelParams<float>& params) {
  AdamState st;
  params.visit([&](const std::string&, Tensor<float>& t) {
    st.m.push_back(Tensor<float>::zeros(t.shape()));
    st.v.push_back(Tensor<float>::zeros(t.shape()));
  });
  return st;
}

/// One bias-corrected update, in place. Missing gradients are treated as
/// zero (moments decay only). NaN/Inf gradients abort with the tensor name.
inline void adam_step(ModelParams<float>& params, AdamState& st, double lr) {
  ++st.step;
  const double c1 = 1.0 - std::pow(st.beta1, double(st.step));
  const double c2 = 1.0 - std::pow(st.beta2, double(st.step));
  const float b1 = float(st.beta1), b2 = float(st.beta2);
  size_t i = 0;
  params.visit([&](const std::string& name, Tensor<float>& t) {
    if (i >= st.m.size()) throw ContractError("adam_step: state out of sync with model");
    float* m = st.m[i].data();
    float* v = st.v[i].data();
    float* p = t.data();
    const float* g = t.grad();  // zeros when nothing accumulated
    for (int64_t j = 0; j < t.size(); ++j)
      if (!std::isfinite(g[j]))
        throw NumericError("adam_step: non-finite gradient in " + name);
    for (int64_t j = 0; j < t.size(); ++j) {
      m[j] = b1 * m[j] + (1.f - b1) * g[j];
      v[j] = b2 * v[j] + (1.f - b2) * g[j] * g[j];
      const double mhat = double(m[j]) / c1;
      const double vhat = double(v[j]) / c2;
      p[j] = float(double(p[j]) - lr * mhat / (std::sqrt(vhat) + st.eps));
    }
    ++i;
  });
  if (i != st.m.size()) throw ContractError("adam_step: state out of sync with model");
}

}  // namespace prnet
