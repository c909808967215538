#include "aliknet/consistency.hpp"

#include <algorithm>

#include "aliknet/errors.hpp"

namespace aliknet {

namespace {

void require_mask_for(const Tensor& k, const Tensor& mask) {
  require_ndim("k-space dc", k, 4);
  require_ndim("k-space dc mask", mask, 2);
  if (mask.dim(0) != k.dim(0) || mask.dim(1) != k.dim(3)) {
    throw ShapeError("mask dims " + dims_to_string(mask.dims()) +
                     " do not match k-space " + dims_to_string(k.dims()));
  }
}

}  // namespace

Tensor image_dc(const Tensor& p, const Tensor& q, const Tensor& y_u,
                const EncodingOperator& op, const ImageDCParams& params,
                ImageDCTrace& trace) {
  require_same_dims("image dc", p, q);
  const double a = std::clamp(params.alpha, 0.0, 1.0);

  Tensor x_init(p.dims());
  for (std::size_t i = 0; i < x_init.size(); ++i) {
    x_init[i] = a * p[i] + (1.0 - a) * q[i];
  }

  Tensor resid_k = op.forward(x_init) - y_u;
  Tensor resid_img = op.adjoint(resid_k);

  Tensor out(p.dims());
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i] = x_init[i] - params.eta * resid_img[i];
  }

  trace.p = p;
  trace.q = q;
  trace.x_init = std::move(x_init);
  trace.resid_img = std::move(resid_img);
  trace.alpha_eff = a;
  return out;
}

ImageDCGrads image_dc_backward(const EncodingOperator& op,
                               const ImageDCParams& params,
                               const ImageDCTrace& trace, const Tensor& g_out) {
  // The gradient-step map x_init -> out is linear and self-adjoint, so the
  // cotangent of x_init is (I - eta*AhA) g_out.
  Tensor aag = op.adjoint(op.forward(g_out));
  Tensor g_xinit(g_out.dims());
  for (std::size_t i = 0; i < g_xinit.size(); ++i) {
    g_xinit[i] = g_out[i] - params.eta * aag[i];
  }

  ImageDCGrads g;
  const double a = trace.alpha_eff;
  g.g_p = scale(g_xinit, cplx(a, 0.0));
  g.g_q = scale(g_xinit, cplx(1.0 - a, 0.0));
  g.g_eta = -dot(trace.resid_img, g_out).real();
  if (params.alpha >= 0.0 && params.alpha <= 1.0) {
    g.g_alpha = dot(trace.p - trace.q, g_xinit).real();
  }
  return g;
}

Tensor kspace_dc(const Tensor& r, const Tensor& y_u, const Tensor& mask,
                 double mu) {
  require_same_dims("k-space dc", r, y_u);
  require_mask_for(r, mask);
  if (!(mu >= 0.0)) {
    throw ConfigError("k-space consistency weight must be >= 0");
  }
  const std::size_t T = r.dim(0), C = r.dim(1), X = r.dim(2), Y = r.dim(3);
  Tensor out = r;
  for (std::size_t t = 0; t < T; ++t) {
    for (std::size_t y = 0; y < Y; ++y) {
      if (mask[mask.idx(t, y)].real() == 0.0) continue;
      for (std::size_t c = 0; c < C; ++c) {
        for (std::size_t x = 0; x < X; ++x) {
          const std::size_t i = r.idx(t, c, x, y);
          out[i] = (mu == 0.0) ? y_u[i] : (y_u[i] + mu * r[i]) / (1.0 + mu);
        }
      }
    }
  }
  return out;
}

KspaceDCGrads kspace_dc_backward(const Tensor& r, const Tensor& y_u,
                                 const Tensor& mask, double mu,
                                 const Tensor& g_out) {
  require_same_dims("k-space dc backward", r, g_out);
  require_mask_for(r, mask);
  const std::size_t T = r.dim(0), C = r.dim(1), X = r.dim(2), Y = r.dim(3);
  const double w = mu / (1.0 + mu);
  const double d = (1.0 + mu) * (1.0 + mu);
  KspaceDCGrads g;
  g.g_r = g_out;
  for (std::size_t t = 0; t < T; ++t) {
    for (std::size_t y = 0; y < Y; ++y) {
      if (mask[mask.idx(t, y)].real() == 0.0) continue;
      for (std::size_t c = 0; c < C; ++c) {
        for (std::size_t x = 0; x < X; ++x) {
          const std::size_t i = r.idx(t, c, x, y);
          const cplx dmu = (r[i] - y_u[i]) / d;
          g.g_mu += dmu.real() * g_out[i].real() + dmu.imag() * g_out[i].imag();
          g.g_r[i] = w * g_out[i];
        }
      }
    }
  }
  return g;
}

IslResult isl(const Tensor& x, const Tensor& y, const Tensor& maps,
              const IslParams& params, IslTrace& trace) {
  const double a = params.a, b = params.b;
  trace.x = x;
  trace.y = y;
  trace.fsx = fs_forward(x, maps);
  require_same_dims("information sharing", trace.fsx, y);

  Tensor y_prime(y.dims());
  for (std::size_t i = 0; i < y_prime.size(); ++i) {
    y_prime[i] = a * trace.fsx[i] + (1.0 - a) * y[i];
  }
  trace.y_prime = y_prime;
  trace.bty = fs_adjoint(y_prime, maps);

  Tensor x_prime(x.dims());
  for (std::size_t i = 0; i < x_prime.size(); ++i) {
    x_prime[i] = b * trace.bty[i] + (1.0 - b) * x[i];
  }
  return IslResult{std::move(x_prime), std::move(y_prime)};
}

IslGrads isl_backward(const Tensor& maps, const IslParams& params,
                      const IslTrace& trace, const Tensor& g_x_out,
                      const Tensor& g_y_out) {
  const double a = params.a, b = params.b;

  // Total cotangent reaching y': directly from the k-space output plus the
  // image output's b*(FS)^H path, whose adjoint is b*FS.
  Tensor fs_gx = fs_forward(g_x_out, maps);
  Tensor g_yp(g_y_out.dims());
  for (std::size_t i = 0; i < g_yp.size(); ++i) {
    g_yp[i] = g_y_out[i] + b * fs_gx[i];
  }

  Tensor adj = fs_adjoint(g_yp, maps);
  IslGrads g;
  g.g_x = Tensor(trace.x.dims());
  for (std::size_t i = 0; i < g.g_x.size(); ++i) {
    g.g_x[i] = (1.0 - b) * g_x_out[i] + a * adj[i];
  }
  g.g_y = scale(g_yp, cplx(1.0 - a, 0.0));
  g.g_b = dot(trace.bty - trace.x, g_x_out).real();
  g.g_a = dot(trace.fsx - trace.y, g_yp).real();
  return g;
}

}  // namespace aliknet
