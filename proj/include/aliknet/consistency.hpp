#pragma once

#include "aliknet/mri.hpp"
#include "aliknet/tensor.hpp"

namespace aliknet {

// Data-consistency layers and the information sharing layer. Like the other
// ops, forwards record what the backward needs into a trace struct, and the
// real-valued layer parameters come in as *effective* values; storing raw
// unconstrained copies and reparameterizing (softplus, sigmoid) is the
// network's business so that limit cases (mu = 0, a = b = 0) stay exact here.
// alpha is the exception: its clamp is exact, so the clamp lives in the op and
// the stored value may be unconstrained.

struct ImageDCParams {
  double eta = 1.0;
  double alpha = 0.5;  // unconstrained; clamped to [0,1] on use
};

struct ImageDCTrace {
  Tensor p, q, x_init;
  Tensor resid_img;  // Ah(A x_init - y_u)
  double alpha_eff = 0.0;
};

struct ImageDCGrads {
  Tensor g_p, g_q;
  double g_eta = 0.0;
  double g_alpha = 0.0;
};

// x_init = alpha*p + (1-alpha)*q, then one gradient step on ||A x - y_u||^2:
// out = x_init - eta * Ah(A x_init - y_u).
Tensor image_dc(const Tensor& p, const Tensor& q, const Tensor& y_u,
                const EncodingOperator& op, const ImageDCParams& params,
                ImageDCTrace& trace);
ImageDCGrads image_dc_backward(const EncodingOperator& op,
                               const ImageDCParams& params,
                               const ImageDCTrace& trace, const Tensor& g_out);

struct KspaceDCGrads {
  Tensor g_r;
  double g_mu = 0.0;
};

// Sampled points move toward the measurements: (y_u + mu*r) / (1 + mu);
// unsampled points keep the prediction r. mu must be >= 0.
Tensor kspace_dc(const Tensor& r, const Tensor& y_u, const Tensor& mask,
                 double mu);
KspaceDCGrads kspace_dc_backward(const Tensor& r, const Tensor& y_u,
                                 const Tensor& mask, double mu,
                                 const Tensor& g_out);

struct IslParams {
  double a = 0.5;
  double b = 0.5;
};

struct IslTrace {
  Tensor x, y, fsx, y_prime, bty;
};

struct IslResult {
  Tensor x, y;
};

struct IslGrads {
  Tensor g_x, g_y;
  double g_a = 0.0;
  double g_b = 0.0;
};

// Couples the branch states through the (unmasked) coil-Fourier transform,
// k-space side first:
//   y' = a*FS x + (1-a)*y
//   x' = b*(FS)^H y' + (1-b)*x
IslResult isl(const Tensor& x, const Tensor& y, const Tensor& maps,
              const IslParams& params, IslTrace& trace);
IslGrads isl_backward(const Tensor& maps, const IslParams& params,
                      const IslTrace& trace, const Tensor& g_x_out,
                      const Tensor& g_y_out);

}  // namespace aliknet
