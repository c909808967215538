#pragma once

#include <vector>

#include "aliknet/rng.hpp"
#include "aliknet/tensor.hpp"

namespace aliknet {

// All layers operate on channels-second layouts: (T, ch, X, Y) for image
// features, (T, ch, C, X, Y) for k-space features.  Cotangents follow the
// convention g = dL/dRe + i*dL/dIm.  Backward passes return the input
// cotangent and accumulate (+=) into caller-provided parameter gradients.

/// Complex 2-d convolution over (X, Y); w has dims (out_ch, in_ch, kx, ky)
/// with odd kernel extents, zero-padded "same".  b is (out_ch) or empty.
Tensor conv2d_xy(const Tensor& x, const Tensor& w, const Tensor& b);
Tensor conv2d_xy_backward(const Tensor& x, const Tensor& w, const Tensor& g_out,
                          Tensor& g_w, Tensor& g_b);

/// Complex 1-d convolution along the frame axis; w is (out_ch, in_ch, kt).
Tensor conv1d_t(const Tensor& x, const Tensor& w, const Tensor& b);
Tensor conv1d_t_backward(const Tensor& x, const Tensor& w, const Tensor& g_out,
                         Tensor& g_w, Tensor& g_b);

/// Spatial conv followed by temporal conv (no activation between).
Tensor conv2dt(const Tensor& x, const Tensor& w_spatial, const Tensor& b_spatial,
               const Tensor& w_temporal, const Tensor& b_temporal);

/// Complex 3-d convolution over (C, X, Y) of (T, ch, C, X, Y) features;
/// w is (out_ch, in_ch, kc, kx, ky).
Tensor conv3d_cxy(const Tensor& x, const Tensor& w, const Tensor& b);
Tensor conv3d_cxy_backward(const Tensor& x, const Tensor& w, const Tensor& g_out,
                           Tensor& g_w, Tensor& g_b);

/// f(z) = relu(|z| + b) * z/|z| with f(0) = 0; b is real, one per channel
/// (axis 1).  Subgradient 0 where |z| + b = 0.
Tensor modrelu(const Tensor& x, const Tensor& bias);
Tensor modrelu_backward(const Tensor& x, const Tensor& bias, const Tensor& g_out,
                        Tensor& g_bias);

/// Magnitude max pooling of 2x2x2 cells over (T, X, Y) of (T, ch, X, Y);
/// odd extents are replication-padded to even first.  The complex value of
/// the maximal-magnitude element is kept; ties go to the lowest flat index.
struct PoolContext {
  std::vector<std::size_t> in_dims;
  std::vector<std::size_t> pad_dims;
  std::vector<std::size_t> src;  // chosen source (padded coords) per output
};
Tensor maxpool3d(const Tensor& x, PoolContext& ctx);
Tensor maxpool3d_backward(const PoolContext& ctx, const Tensor& g_out);

/// Transpose convolution with kernel 1, stride 2 over (T, X, Y): doubles the
/// pooled axes, then crops to the requested target extents.  w is
/// (out_ch, in_ch); positions not reached by the kernel carry only the bias.
Tensor upsample3d(const Tensor& x, const Tensor& w, const Tensor& b,
                  std::size_t t_out, std::size_t x_out, std::size_t y_out);
Tensor upsample3d_backward(const Tensor& x, const Tensor& w, const Tensor& g_out,
                           Tensor& g_w, Tensor& g_b);

/// Squeeze-and-excitation attention over one axis (frame axis for image
/// features, coil axis for k-space features).  Real and imaginary parts are
/// treated as separate slots along the attended axis (2A in total), pooled by
/// a global max over all other axes, passed through reduce/ReLU and
/// expand/sigmoid dense layers, and the resulting per-slot weights scale the
/// real and imaginary components independently.
struct AttentionWeights {
  Tensor w1;  // (hidden, 2A) real
  Tensor b1;  // (hidden)
  Tensor w2;  // (2A, hidden)
  Tensor b2;  // (2A)
};
struct AttentionContext {
  std::vector<std::size_t> argmax;          // flat source per slot
  std::vector<double> pooled, z1, h, z2, wv;
};
AttentionWeights make_attention_weights(std::size_t axis_len, std::size_t ratio,
                                        Rng& rng);
Tensor se_attention(const Tensor& x, const AttentionWeights& w, std::size_t axis,
                    AttentionContext& ctx);
Tensor se_attention_backward(const Tensor& x, const AttentionWeights& w,
                             std::size_t axis, const AttentionContext& ctx,
                             const Tensor& g_out, AttentionWeights& g_w);

}  // namespace aliknet
