#pragma once

#include <vector>

#include "aliknet/layers.hpp"
#include "aliknet/rng.hpp"
#include "aliknet/tensor.hpp"

namespace aliknet {

// ---------------------------------------------------------------------------
// Image subnetwork: two-stage residual 2D+t UNet with time attention.
// Each stage is spatial conv -> ModReLU -> temporal conv -> ModReLU.
// Encoder stages are followed by 2x2x2 magnitude max pooling; the decoder
// mirrors them with kernel-1 stride-2 transpose convolutions, additive skip
// connections from the encoder stages, and attention over the frame axis at
// the end of each decoder stage.  A 1x1 linear conv forms the body output,
// added to the input (global residual).
// ---------------------------------------------------------------------------

struct StageParams {
  Tensor ws, bs;   // spatial conv kernel + bias
  Tensor mb1;      // ModReLU bias after the spatial conv
  Tensor wt, bt;   // temporal conv kernel + bias
  Tensor mb2;      // ModReLU bias after the temporal conv
};

struct UNetParams {
  StageParams enc1, enc2, dec2, dec1;
  Tensor up1_w, up1_b;  // transpose conv at the deepest level
  Tensor up2_w, up2_b;
  AttentionWeights att2, att1;  // sized for ceil(T/2) and T frames
  Tensor out_w, out_b;          // 1x1 output conv, one filter
};

struct StageTrace {
  Tensor in, c1, a1, c2;
};

struct UNetTrace {
  StageTrace e1, e2, d2, d1;
  PoolContext pool1, pool2;
  Tensor e1_out, e2_out, p1, p2, u1_in_sum, d2_out, t2, u2_in_sum, d1_out, t1;
  AttentionContext att2_ctx, att1_ctx;
};

UNetParams init_unet(std::size_t filters, std::size_t spatial_kernel,
                     std::size_t temporal_kernel, std::size_t T,
                     std::size_t attention_ratio, bool attention, Rng& rng);

/// x is (T, X, Y); returns (T, X, Y).  use_attention must match how the
/// params were initialized.
Tensor unet_forward(const Tensor& x, const UNetParams& p, bool use_attention,
                    UNetTrace& trace);
Tensor unet_backward(const UNetParams& p, bool use_attention, const UNetTrace& trace,
                     const Tensor& g_out, UNetParams& g);

// ---------------------------------------------------------------------------
// Low-rank subnetwork: overlapping spatial patches x non-overlapping frame
// groups; each patch's Casorati matrix (rows = patch pixels, columns = frames)
// is hard-thresholded at zeta = sigmoid(tau) * mean(singular values), with one
// learnable tau per patch.  Merging averages overlapping pixels uniformly.
// ---------------------------------------------------------------------------

struct PatchSpec {
  std::size_t nt = 1, nx = 1, ny = 1;
};

struct PatchBox {
  std::size_t t0, t1, x0, x1, y0, y1;
};

/// Patch geometry for an image of dims (T, X, Y): spatial extent
/// ceil(X/nx) + floor(ceil(X/nx)/4) overlap, clipped at the borders; frame
/// groups partition T (nt must divide T).
std::vector<PatchBox> patch_layout(std::size_t T, std::size_t X, std::size_t Y,
                                   const PatchSpec& spec);

struct SvtContext {
  std::size_t m = 0, n = 0;
  std::vector<cplx> u, v;    // economy factors, column-major
  std::vector<double> s;     // singular values, descending
  std::vector<char> kept;
  double zeta = 0.0, sigma_bar = 0.0, tau = 0.0;
};

/// Singular-value hard thresholding of one column-major m x n matrix.
/// With surrogate = true the thresholding step is smoothed
/// (max(s-z,0) + z*sigmoid((s-z)/eps), eps = 0.01*mean(s)), which makes the
/// forward differentiable in tau for gradient checking.
std::vector<cplx> svt_apply(const std::vector<cplx>& a, std::size_t m,
                            std::size_t n, double tau, bool surrogate,
                            SvtContext& ctx);
/// Patch cotangent treats the singular vectors as constants; the tau
/// cotangent always differentiates the smoothed surrogate.
void svt_backward(const SvtContext& ctx, const std::vector<cplx>& g_out,
                  std::vector<cplx>& g_in, double& g_tau);

struct LowRankContext {
  std::vector<PatchBox> boxes;
  std::vector<SvtContext> svt;
  Tensor coverage;  // (X, Y) spatial overlap counts
};

/// tau holds one real value per patch in (group, ix, iy) order.
Tensor lowrank_forward(const Tensor& x, const Tensor& tau, const PatchSpec& spec,
                       bool surrogate, LowRankContext& ctx);
Tensor lowrank_backward(const LowRankContext& ctx, const Tensor& g_out,
                        Tensor& g_tau);

// ---------------------------------------------------------------------------
// K-space subnetwork: three bias-free complex 3-d convolutions over
// (coil, x, y); ModReLU and coil attention after the first two layers,
// linear final layer, optional residual connection from input to output.
// ---------------------------------------------------------------------------

struct KNetParams {
  Tensor w1, w2, w3;  // (f,1,k,k,k), (f,f,k,k,k), (1,f,k,k,k), no biases
  Tensor mb1, mb2;    // ModReLU biases
  AttentionWeights att1, att2;
};

struct KNetTrace {
  Tensor f0, l1, a1, t1, l2, a2, t2;
  AttentionContext ac1, ac2;
};

KNetParams init_knet(std::size_t filters, std::size_t kernel, std::size_t coils,
                     std::size_t attention_ratio, bool attention, Rng& rng);

/// y is (T, C, X, Y); returns the same dims.
Tensor knet_forward(const Tensor& y, const KNetParams& p, bool use_attention,
                    bool residual, KNetTrace& trace);
Tensor knet_backward(const KNetParams& p, bool use_attention, bool residual,
                     const KNetTrace& trace, const Tensor& g_out, KNetParams& g);

}  // namespace aliknet
