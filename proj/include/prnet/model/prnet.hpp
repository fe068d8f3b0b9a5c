#pragma once

#include <vector>

#include "prnet/model/params.hpp"

namespace prnet {

template <typename T>
struct IterationTrace {
  std::vector<Tensor<T>> predictions;  // I_1 .. I_T
  std::vector<Tensor<T>> hiddens;      // h_0 .. h_T
};

namespace detail {

template <typename T>
Tensor<T> conv_norm_relu(Tape<T>* tape, const Tensor<T>& x, const ConvNorm<T>& p, T eps) {
  auto y = conv2d(tape, x, p.conv.w, p.conv.b, p.conv.stride, p.conv.pad);
  y = instance_norm(tape, y, p.norm.scale, p.norm.shift, eps);
  return relu(tape, y);
}

template <typename T>
Tensor<T> residual_block(Tape<T>* tape, const Tensor<T>& x, const ResidualBlock<T>& blk, T eps) {
  auto y = conv_norm_relu(tape, x, blk.c1, eps);
  y = conv2d(tape, y, blk.c2.conv.w, blk.c2.conv.b, blk.c2.conv.stride, blk.c2.conv.pad);
  y = instance_norm(tape, y, blk.c2.norm.scale, blk.c2.norm.shift, eps);
  Tensor<T> skip = x;
  if (blk.has_proj) {
    skip = conv2d(tape, x, blk.proj.conv.w, blk.proj.conv.b, blk.proj.conv.stride,
                  blk.proj.conv.pad);
    skip = instance_norm(tape, skip, blk.proj.norm.scale, blk.proj.norm.shift, eps);
  }
  return relu(tape, add(tape, y, skip));
}

}  // namespace detail

inline constexpr double kNormEps = 1e-5;

/// Shallow ResNet over (image, mask) at full resolution; runs once per
/// forward pass and yields both the update input seed and h_0.
template <typename T>
Tensor<T> extract_features(Tape<T>* tape, const Tensor<T>& image, const Tensor<T>& mask,
                           const ExtractorParams<T>& p) {
  if (image.shape().c != 3)
    throw DimensionError("extract_features: image must have 3 channels, got " +
                         image.shape().str());
  if (mask.shape().c != 1)
    throw DimensionError("extract_features: mask must have 1 channel, got " +
                         mask.shape().str());
  if (image.shape().h < 8 || image.shape().w < 8)
    throw DimensionError("extract_features: spatial extent must be >= 8, got " +
                         image.shape().str());
  for (int64_t i = 0; i < mask.size(); ++i) {
    const T v = mask.data()[i];
    if (!(v >= T(0) && v <= T(1)))
      throw ContractError("extract_features: mask values must lie in [0, 1]");
  }
  const T eps = T(kNormEps);
  auto x = concat_channels(tape, {image, mask});
  x = detail::conv_norm_relu(tape, x, p.conv1, eps);
  for (const auto& blk : p.layer1) x = detail::residual_block(tape, x, blk, eps);
  for (const auto& blk : p.layer2) x = detail::residual_block(tape, x, blk, eps);
  for (const auto& blk : p.layer3) x = detail::residual_block(tape, x, blk, eps);
  return detail::conv_norm_relu(tape, x, p.conv2, eps);
}

/// Optional capture of the re-integration branch features.
template <typename T>
struct ReintProbe {
  Tensor<T> f_s;
  Tensor<T> f_l;
};

/// Fuses the previous prediction (with the mask) and the previous hidden
/// state into the next update input: F_s from concat(I_prev, M), F_l from
/// h_prev, F_r from concat(F_s, F_l), each conv followed by norm + relu.
template <typename T>
Tensor<T> reintegrate(Tape<T>* tape, const Tensor<T>& prev_image, const Tensor<T>& mask,
                      const Tensor<T>& prev_hidden, const ReintegrationParams<T>& p,
                      ReintProbe<T>* probe = nullptr) {
  const T eps = T(kNormEps);
  auto f_s = detail::conv_norm_relu(tape, concat_channels(tape, {prev_image, mask}), p.conv_s,
                                    eps);
  auto f_l = detail::conv_norm_relu(tape, prev_hidden, p.conv_l, eps);
  if (probe) {
    probe->f_s = f_s;
    probe->f_l = f_l;
  }
  return detail::conv_norm_relu(tape, concat_channels(tape, {f_s, f_l}), p.conv_r, eps);
}

/// One ConvGRU update:
///   z = sigmoid(conv([h, x]; Wz)),  r = sigmoid(conv([h, x]; Wr)),
///   h~ = tanh(conv([r ⊙ h, x]; Wh)),  h' = (1 - z) ⊙ h + z ⊙ h~.
template <typename T>
Tensor<T> gru_step(Tape<T>* tape, const Tensor<T>& h_prev, const Tensor<T>& x,
                   const GruParams<T>& p) {
  detail::require_same_shape("gru_step", h_prev, x);
  auto hx = concat_channels(tape, {h_prev, x});
  auto z = sigmoid(tape, conv2d(tape, hx, p.wz.w, p.wz.b, p.wz.stride, p.wz.pad));
  auto r = sigmoid(tape, conv2d(tape, hx, p.wr.w, p.wr.b, p.wr.stride, p.wr.pad));
  auto rh = concat_channels(tape, {mul(tape, r, h_prev), x});
  auto h_tilde = tanh_op(tape, conv2d(tape, rh, p.wh.w, p.wh.b, p.wh.stride, p.wh.pad));
  auto ones = Tensor<T>::full(z.shape(), T(1));
  return add(tape, mul(tape, sub(tape, ones, z), h_prev), mul(tape, z, h_tilde));
}

/// Two-conv prediction head. Direct image prediction by default; the
/// residual ablation adds the output to the original shadow image instead.
template <typename T>
Tensor<T> predict_tail(Tape<T>* tape, const Tensor<T>& h, const TailParams<T>& p,
                       bool residual_output = false, const Tensor<T>& input_image = {}) {
  auto y = relu(tape, conv2d(tape, h, p.conv_a.w, p.conv_a.b, p.conv_a.stride, p.conv_a.pad));
  y = conv2d(tape, y, p.conv_b.w, p.conv_b.b, p.conv_b.stride, p.conv_b.pad);
  if (residual_output) {
    if (!input_image.valid())
      throw ContractError("predict_tail: residual output needs the input image");
    y = add(tape, y, input_image);
  }
  return y;
}

/// The T-iteration progressive pass. Features are extracted exactly once;
/// every iteration re-integrates the previous outputs, updates the hidden
/// state and predicts the next shadow-attenuated image.
template <typename T>
IterationTrace<T> forward(Tape<T>* tape, const Tensor<T>& image, const Tensor<T>& mask,
                          const ModelParams<T>& params, int iterations) {
  if (iterations < 1) throw ContractError("forward: iterations must be >= 1");
  IterationTrace<T> trace;
  Tensor<T> h = extract_features(tape, image, mask, params.extractor);
  trace.hiddens.push_back(h);
  Tensor<T> pred = image;
  for (int k = 0; k < iterations; ++k) {
    const IterationParams<T>& blk = params.block(k);
    Tensor<T> h_next;
    if (params.cfg.use_update) {
      // GRU input: re-integrated features, or h_0 when re-integration is off
      Tensor<T> x = params.cfg.use_reintegration
                        ? reintegrate(tape, pred, mask, h, blk.reint)
                        : trace.hiddens.front();
      h_next = gru_step(tape, h, x, blk.gru);
    } else if (params.cfg.use_reintegration) {
      // no update module: the re-integrated features become the hidden state
      h_next = reintegrate(tape, pred, mask, h, blk.reint);
    } else {
      // extractor-only baseline
      h_next = h;
    }
    pred = predict_tail(tape, h_next, blk.tail, params.cfg.residual_output, image);
    trace.hiddens.push_back(h_next);
    trace.predictions.push_back(pred);
    h = h_next;
  }
  return trace;
}

}  // namespace prnet
