#include "aliknet/layers.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace aliknet {

namespace {

// valid output range [lo, hi) for one kernel tap so that src = out + ofs
// stays inside [0, n)
struct TapRange {
  std::size_t lo, hi;
  std::ptrdiff_t ofs;
};

TapRange tap_range(std::size_t n, std::size_t d, std::size_t center) {
  const std::ptrdiff_t ofs =
      static_cast<std::ptrdiff_t>(d) - static_cast<std::ptrdiff_t>(center);
  const std::ptrdiff_t lo = std::max<std::ptrdiff_t>(0, -ofs);
  const std::ptrdiff_t hi =
      std::min<std::ptrdiff_t>(static_cast<std::ptrdiff_t>(n),
                               static_cast<std::ptrdiff_t>(n) - ofs);
  return {static_cast<std::size_t>(lo),
          static_cast<std::size_t>(std::max(lo, hi)), ofs};
}

// dst += w * src, componentwise complex multiply written out
void axpy_line(cplx w, const cplx* src, cplx* dst, std::size_t len) {
  const double wr = w.real(), wi = w.imag();
  for (std::size_t k = 0; k < len; ++k) {
    const double xr = src[k].real(), xi = src[k].imag();
    dst[k] += cplx(wr * xr - wi * xi, wr * xi + wi * xr);
  }
}

// sum of conj(a) * b
cplx dot_line(const cplx* a, const cplx* b, std::size_t len) {
  double re = 0.0, im = 0.0;
  for (std::size_t k = 0; k < len; ++k) {
    const double ar = a[k].real(), ai = a[k].imag();
    const double br = b[k].real(), bi = b[k].imag();
    re += ar * br + ai * bi;
    im += ar * bi - ai * br;
  }
  return {re, im};
}

void require_odd_kernel(const char* op, const Tensor& w, std::size_t first_axis) {
  for (std::size_t a = first_axis; a < w.ndim(); ++a) {
    if (w.dim(a) % 2 == 0) {
      throw ShapeError(std::string(op) + ": kernel dims " +
                       dims_to_string(w.dims()) + " must be odd along convolved axes");
    }
  }
}

void require_channels(const char* op, const Tensor& x, const Tensor& w) {
  if (x.dim(1) != w.dim(1)) {
    throw ShapeError(std::string(op) + ": input channels of " +
                     dims_to_string(x.dims()) + " do not match kernel " +
                     dims_to_string(w.dims()));
  }
}

double relu(double v) { return v > 0.0 ? v : 0.0; }
double sigmoid(double v) { return 1.0 / (1.0 + std::exp(-v)); }

}  // namespace

Tensor conv2d_xy(const Tensor& x, const Tensor& w, const Tensor& b) {
  require_ndim("conv2d_xy input", x, 4);
  require_ndim("conv2d_xy kernel", w, 4);
  require_channels("conv2d_xy", x, w);
  require_odd_kernel("conv2d_xy", w, 2);
  const std::size_t T = x.dim(0), Ci = x.dim(1), X = x.dim(2), Y = x.dim(3);
  const std::size_t Co = w.dim(0), kx = w.dim(2), ky = w.dim(3);
  const std::size_t cx = kx / 2, cy = ky / 2;

  Tensor out({T, Co, X, Y});
  if (!b.empty()) {
    for (std::size_t t = 0; t < T; ++t) {
      for (std::size_t o = 0; o < Co; ++o) {
        cplx* plane = out.data() + out.idx(t, o, 0, 0);
        for (std::size_t i = 0; i < X * Y; ++i) plane[i] = b[o];
      }
    }
  }
  for (std::size_t t = 0; t < T; ++t) {
    for (std::size_t o = 0; o < Co; ++o) {
      cplx* oplane = out.data() + out.idx(t, o, 0, 0);
      for (std::size_t i = 0; i < Ci; ++i) {
        const cplx* xplane = x.data() + x.idx(t, i, 0, 0);
        for (std::size_t dx = 0; dx < kx; ++dx) {
          const TapRange rx = tap_range(X, dx, cx);
          for (std::size_t dy = 0; dy < ky; ++dy) {
            const TapRange ry = tap_range(Y, dy, cy);
            const std::size_t len = ry.hi - ry.lo;
            if (len == 0) continue;
            const cplx wv = w[w.idx(o, i, dx, dy)];
            for (std::size_t xx = rx.lo; xx < rx.hi; ++xx) {
              const cplx* src =
                  xplane + (xx + rx.ofs) * Y + (ry.lo + ry.ofs);
              axpy_line(wv, src, oplane + xx * Y + ry.lo, len);
            }
          }
        }
      }
    }
  }
  return out;
}

Tensor conv2d_xy_backward(const Tensor& x, const Tensor& w, const Tensor& g_out,
                          Tensor& g_w, Tensor& g_b) {
  const std::size_t T = x.dim(0), Ci = x.dim(1), X = x.dim(2), Y = x.dim(3);
  const std::size_t Co = w.dim(0), kx = w.dim(2), ky = w.dim(3);
  const std::size_t cx = kx / 2, cy = ky / 2;

  Tensor g_x(x.dims());
  for (std::size_t t = 0; t < T; ++t) {
    for (std::size_t o = 0; o < Co; ++o) {
      const cplx* gplane = g_out.data() + g_out.idx(t, o, 0, 0);
      for (std::size_t i = 0; i < Ci; ++i) {
        cplx* gxplane = g_x.data() + g_x.idx(t, i, 0, 0);
        for (std::size_t dx = 0; dx < kx; ++dx) {
          const TapRange rx = tap_range(X, dx, cx);
          for (std::size_t dy = 0; dy < ky; ++dy) {
            const TapRange ry = tap_range(Y, dy, cy);
            const std::size_t len = ry.hi - ry.lo;
            if (len == 0) continue;
            const cplx wc = std::conj(w[w.idx(o, i, dx, dy)]);
            for (std::size_t xx = rx.lo; xx < rx.hi; ++xx) {
              cplx* dst = gxplane + (xx + rx.ofs) * Y + (ry.lo + ry.ofs);
              axpy_line(wc, gplane + xx * Y + ry.lo, dst, len);
            }
          }
        }
      }
    }
  }
  for (std::size_t o = 0; o < Co; ++o) {
    for (std::size_t i = 0; i < Ci; ++i) {
      for (std::size_t dx = 0; dx < kx; ++dx) {
        const TapRange rx = tap_range(X, dx, cx);
        for (std::size_t dy = 0; dy < ky; ++dy) {
          const TapRange ry = tap_range(Y, dy, cy);
          const std::size_t len = ry.hi - ry.lo;
          if (len == 0) continue;
          cplx acc(0.0, 0.0);
          for (std::size_t t = 0; t < T; ++t) {
            const cplx* xplane = x.data() + x.idx(t, i, 0, 0);
            const cplx* gplane = g_out.data() + g_out.idx(t, o, 0, 0);
            for (std::size_t xx = rx.lo; xx < rx.hi; ++xx) {
              acc += dot_line(xplane + (xx + rx.ofs) * Y + (ry.lo + ry.ofs),
                              gplane + xx * Y + ry.lo, len);
            }
          }
          g_w[g_w.idx(o, i, dx, dy)] += acc;
        }
      }
    }
  }
  if (!g_b.empty()) {
    for (std::size_t t = 0; t < T; ++t) {
      for (std::size_t o = 0; o < Co; ++o) {
        const cplx* gplane = g_out.data() + g_out.idx(t, o, 0, 0);
        cplx acc(0.0, 0.0);
        for (std::size_t i = 0; i < X * Y; ++i) acc += gplane[i];
        g_b[o] += acc;
      }
    }
  }
  return g_x;
}

Tensor conv1d_t(const Tensor& x, const Tensor& w, const Tensor& b) {
  require_ndim("conv1d_t input", x, 4);
  require_ndim("conv1d_t kernel", w, 3);
  require_channels("conv1d_t", x, w);
  require_odd_kernel("conv1d_t", w, 2);
  const std::size_t T = x.dim(0), Ci = x.dim(1), X = x.dim(2), Y = x.dim(3);
  const std::size_t Co = w.dim(0), kt = w.dim(2);
  const std::size_t ct = kt / 2;
  const std::size_t plane = X * Y;

  Tensor out({T, Co, X, Y});
  if (!b.empty()) {
    for (std::size_t t = 0; t < T; ++t) {
      for (std::size_t o = 0; o < Co; ++o) {
        cplx* p = out.data() + out.idx(t, o, 0, 0);
        for (std::size_t i = 0; i < plane; ++i) p[i] = b[o];
      }
    }
  }
  for (std::size_t o = 0; o < Co; ++o) {
    for (std::size_t i = 0; i < Ci; ++i) {
      for (std::size_t dt = 0; dt < kt; ++dt) {
        const TapRange rt = tap_range(T, dt, ct);
        const cplx wv = w[w.idx(o, i, dt)];
        for (std::size_t t = rt.lo; t < rt.hi; ++t) {
          axpy_line(wv, x.data() + x.idx(t + rt.ofs, i, 0, 0),
                    out.data() + out.idx(t, o, 0, 0), plane);
        }
      }
    }
  }
  return out;
}

Tensor conv1d_t_backward(const Tensor& x, const Tensor& w, const Tensor& g_out,
                         Tensor& g_w, Tensor& g_b) {
  const std::size_t T = x.dim(0), Ci = x.dim(1), X = x.dim(2), Y = x.dim(3);
  const std::size_t Co = w.dim(0), kt = w.dim(2);
  const std::size_t ct = kt / 2;
  const std::size_t plane = X * Y;

  Tensor g_x(x.dims());
  for (std::size_t o = 0; o < Co; ++o) {
    for (std::size_t i = 0; i < Ci; ++i) {
      for (std::size_t dt = 0; dt < kt; ++dt) {
        const TapRange rt = tap_range(T, dt, ct);
        const cplx wc = std::conj(w[w.idx(o, i, dt)]);
        cplx acc(0.0, 0.0);
        for (std::size_t t = rt.lo; t < rt.hi; ++t) {
          axpy_line(wc, g_out.data() + g_out.idx(t, o, 0, 0),
                    g_x.data() + g_x.idx(t + rt.ofs, i, 0, 0), plane);
          acc += dot_line(x.data() + x.idx(t + rt.ofs, i, 0, 0),
                          g_out.data() + g_out.idx(t, o, 0, 0), plane);
        }
        g_w[g_w.idx(o, i, dt)] += acc;
      }
    }
  }
  if (!g_b.empty()) {
    for (std::size_t t = 0; t < T; ++t) {
      for (std::size_t o = 0; o < Co; ++o) {
        const cplx* gplane = g_out.data() + g_out.idx(t, o, 0, 0);
        cplx acc(0.0, 0.0);
        for (std::size_t i = 0; i < plane; ++i) acc += gplane[i];
        g_b[o] += acc;
      }
    }
  }
  return g_x;
}

Tensor conv2dt(const Tensor& x, const Tensor& w_spatial, const Tensor& b_spatial,
               const Tensor& w_temporal, const Tensor& b_temporal) {
  return conv1d_t(conv2d_xy(x, w_spatial, b_spatial), w_temporal, b_temporal);
}

Tensor conv3d_cxy(const Tensor& x, const Tensor& w, const Tensor& b) {
  require_ndim("conv3d_cxy input", x, 5);
  require_ndim("conv3d_cxy kernel", w, 5);
  require_channels("conv3d_cxy", x, w);
  require_odd_kernel("conv3d_cxy", w, 2);
  const std::size_t T = x.dim(0), Ci = x.dim(1), C = x.dim(2), X = x.dim(3),
                    Y = x.dim(4);
  const std::size_t Co = w.dim(0), kc = w.dim(2), kx = w.dim(3), ky = w.dim(4);
  const std::size_t cc = kc / 2, cx = kx / 2, cy = ky / 2;

  Tensor out({T, Co, C, X, Y});
  if (!b.empty()) {
    for (std::size_t t = 0; t < T; ++t) {
      for (std::size_t o = 0; o < Co; ++o) {
        cplx* p = out.data() + out.idx(t, o, 0, 0, 0);
        for (std::size_t i = 0; i < C * X * Y; ++i) p[i] = b[o];
      }
    }
  }
  for (std::size_t t = 0; t < T; ++t) {
    for (std::size_t o = 0; o < Co; ++o) {
      cplx* ovol = out.data() + out.idx(t, o, 0, 0, 0);
      for (std::size_t i = 0; i < Ci; ++i) {
        const cplx* xvol = x.data() + x.idx(t, i, 0, 0, 0);
        for (std::size_t dc = 0; dc < kc; ++dc) {
          const TapRange rc = tap_range(C, dc, cc);
          for (std::size_t dx = 0; dx < kx; ++dx) {
            const TapRange rx = tap_range(X, dx, cx);
            for (std::size_t dy = 0; dy < ky; ++dy) {
              const TapRange ry = tap_range(Y, dy, cy);
              const std::size_t len = ry.hi - ry.lo;
              if (len == 0) continue;
              const cplx wv = w[w.idx(o, i, dc, dx, dy)];
              for (std::size_t c = rc.lo; c < rc.hi; ++c) {
                for (std::size_t xx = rx.lo; xx < rx.hi; ++xx) {
                  const cplx* src = xvol + ((c + rc.ofs) * X + (xx + rx.ofs)) * Y +
                                    (ry.lo + ry.ofs);
                  axpy_line(wv, src, ovol + (c * X + xx) * Y + ry.lo, len);
                }
              }
            }
          }
        }
      }
    }
  }
  return out;
}

Tensor conv3d_cxy_backward(const Tensor& x, const Tensor& w, const Tensor& g_out,
                           Tensor& g_w, Tensor& g_b) {
  const std::size_t T = x.dim(0), Ci = x.dim(1), C = x.dim(2), X = x.dim(3),
                    Y = x.dim(4);
  const std::size_t Co = w.dim(0), kc = w.dim(2), kx = w.dim(3), ky = w.dim(4);
  const std::size_t cc = kc / 2, cx = kx / 2, cy = ky / 2;

  Tensor g_x(x.dims());
  for (std::size_t t = 0; t < T; ++t) {
    for (std::size_t o = 0; o < Co; ++o) {
      const cplx* gvol = g_out.data() + g_out.idx(t, o, 0, 0, 0);
      for (std::size_t i = 0; i < Ci; ++i) {
        cplx* gxvol = g_x.data() + g_x.idx(t, i, 0, 0, 0);
        for (std::size_t dc = 0; dc < kc; ++dc) {
          const TapRange rc = tap_range(C, dc, cc);
          for (std::size_t dx = 0; dx < kx; ++dx) {
            const TapRange rx = tap_range(X, dx, cx);
            for (std::size_t dy = 0; dy < ky; ++dy) {
              const TapRange ry = tap_range(Y, dy, cy);
              const std::size_t len = ry.hi - ry.lo;
              if (len == 0) continue;
              const cplx wc = std::conj(w[w.idx(o, i, dc, dx, dy)]);
              for (std::size_t c = rc.lo; c < rc.hi; ++c) {
                for (std::size_t xx = rx.lo; xx < rx.hi; ++xx) {
                  cplx* dst = gxvol + ((c + rc.ofs) * X + (xx + rx.ofs)) * Y +
                              (ry.lo + ry.ofs);
                  axpy_line(wc, gvol + (c * X + xx) * Y + ry.lo, dst, len);
                }
              }
            }
          }
        }
      }
    }
  }
  for (std::size_t o = 0; o < Co; ++o) {
    for (std::size_t i = 0; i < Ci; ++i) {
      for (std::size_t dc = 0; dc < kc; ++dc) {
        const TapRange rc = tap_range(C, dc, cc);
        for (std::size_t dx = 0; dx < kx; ++dx) {
          const TapRange rx = tap_range(X, dx, cx);
          for (std::size_t dy = 0; dy < ky; ++dy) {
            const TapRange ry = tap_range(Y, dy, cy);
            const std::size_t len = ry.hi - ry.lo;
            if (len == 0) continue;
            cplx acc(0.0, 0.0);
            for (std::size_t t = 0; t < T; ++t) {
              const cplx* xvol = x.data() + x.idx(t, i, 0, 0, 0);
              const cplx* gvol = g_out.data() + g_out.idx(t, o, 0, 0, 0);
              for (std::size_t c = rc.lo; c < rc.hi; ++c) {
                for (std::size_t xx = rx.lo; xx < rx.hi; ++xx) {
                  acc += dot_line(
                      xvol + ((c + rc.ofs) * X + (xx + rx.ofs)) * Y + (ry.lo + ry.ofs),
                      gvol + (c * X + xx) * Y + ry.lo, len);
                }
              }
            }
            g_w[g_w.idx(o, i, dc, dx, dy)] += acc;
          }
        }
      }
    }
  }
  if (!g_b.empty()) {
    for (std::size_t t = 0; t < T; ++t) {
      for (std::size_t o = 0; o < Co; ++o) {
        const cplx* gvol = g_out.data() + g_out.idx(t, o, 0, 0, 0);
        cplx acc(0.0, 0.0);
        for (std::size_t i = 0; i < C * X * Y; ++i) acc += gvol[i];
        g_b[o] += acc;
      }
    }
  }
  return g_x;
}

namespace {

void modrelu_dims(const Tensor& x, const Tensor& bias, std::size_t& outer,
                  std::size_t& ch, std::size_t& inner) {
  if (x.ndim() < 2) {
    throw ShapeError("modrelu input " + dims_to_string(x.dims()) +
                     " needs a channel axis");
  }
  ch = x.dim(1);
  if (bias.ndim() != 1 || bias.dim(0) != ch) {
    throw ShapeError("modrelu bias " + dims_to_string(bias.dims()) +
                     " does not match channels of " + dims_to_string(x.dims()));
  }
  outer = x.dim(0);
  inner = x.size() / (outer * ch);
}

}  // namespace

Tensor modrelu(const Tensor& x, const Tensor& bias) {
  std::size_t outer, ch, inner;
  modrelu_dims(x, bias, outer, ch, inner);
  Tensor out(x.dims());
  std::size_t p = 0;
  for (std::size_t o = 0; o < outer; ++o) {
    for (std::size_t c = 0; c < ch; ++c) {
      const double b = bias[c].real();
      for (std::size_t i = 0; i < inner; ++i, ++p) {
        const cplx z = x[p];
        const double m = std::abs(z);
        const double act = m + b;
        out[p] = (m > 0.0 && act > 0.0) ? (act / m) * z : cplx(0.0, 0.0);
      }
    }
  }
  return out;
}

Tensor modrelu_backward(const Tensor& x, const Tensor& bias, const Tensor& g_out,
                        Tensor& g_bias) {
  std::size_t outer, ch, inner;
  modrelu_dims(x, bias, outer, ch, inner);
  require_same_dims("modrelu_backward", x, g_out);
  Tensor g_x(x.dims());
  std::size_t p = 0;
  for (std::size_t o = 0; o < outer; ++o) {
    for (std::size_t c = 0; c < ch; ++c) {
      const double b = bias[c].real();
      double gb = 0.0;
      for (std::size_t i = 0; i < inner; ++i, ++p) {
        const cplx z = x[p];
        const double m = std::abs(z);
        const double act = m + b;
        if (m > 0.0 && act > 0.0) {
          const cplx g = g_out[p];
          const double radial = z.real() * g.real() + z.imag() * g.imag();
          g_x[p] = (act / m) * g - (b / (m * m * m)) * radial * z;
          gb += radial / m;
        }
      }
      g_bias[c] += cplx(gb, 0.0);
    }
  }
  return g_x;
}

Tensor maxpool3d(const Tensor& x, PoolContext& ctx) {
  require_ndim("maxpool3d input", x, 4);
  const std::size_t T = x.dim(0), ch = x.dim(1), X = x.dim(2), Y = x.dim(3);
  const std::size_t Tp = T + (T & 1), Xp = X + (X & 1), Yp = Y + (Y & 1);

  Tensor padded({Tp, ch, Xp, Yp});
  for (std::size_t t = 0; t < Tp; ++t) {
    const std::size_t ts = std::min(t, T - 1);
    for (std::size_t c = 0; c < ch; ++c) {
      for (std::size_t xx = 0; xx < Xp; ++xx) {
        const std::size_t xs = std::min(xx, X - 1);
        for (std::size_t yy = 0; yy < Yp; ++yy) {
          padded[padded.idx(t, c, xx, yy)] = x[x.idx(ts, c, xs, std::min(yy, Y - 1))];
        }
      }
    }
  }

  ctx.in_dims = x.dims();
  ctx.pad_dims = padded.dims();
  Tensor out({Tp / 2, ch, Xp / 2, Yp / 2});
  ctx.src.assign(out.size(), 0);
  for (std::size_t t = 0; t < Tp / 2; ++t) {
    for (std::size_t c = 0; c < ch; ++c) {
      for (std::size_t xx = 0; xx < Xp / 2; ++xx) {
        for (std::size_t yy = 0; yy < Yp / 2; ++yy) {
          double best = -1.0;
          std::size_t best_idx = 0;
          for (std::size_t dt = 0; dt < 2; ++dt) {
            for (std::size_t dx = 0; dx < 2; ++dx) {
              for (std::size_t dy = 0; dy < 2; ++dy) {
                const std::size_t idx =
                    padded.idx(2 * t + dt, c, 2 * xx + dx, 2 * yy + dy);
                const double mag = std::abs(padded[idx]);
                if (mag > best) {
                  best = mag;
                  best_idx = idx;
                }
              }
            }
          }
          const std::size_t op = out.idx(t, c, xx, yy);
          out[op] = padded[best_idx];
          ctx.src[op] = best_idx;
        }
      }
    }
  }
  return out;
}

Tensor maxpool3d_backward(const PoolContext& ctx, const Tensor& g_out) {
  Tensor g_pad(ctx.pad_dims);
  for (std::size_t i = 0; i < g_out.size(); ++i) g_pad[ctx.src[i]] += g_out[i];

  const std::size_t T = ctx.in_dims[0], ch = ctx.in_dims[1], X = ctx.in_dims[2],
                    Y = ctx.in_dims[3];
  const std::size_t Tp = ctx.pad_dims[0], Xp = ctx.pad_dims[2], Yp = ctx.pad_dims[3];
  Tensor g_x(ctx.in_dims);
  for (std::size_t t = 0; t < Tp; ++t) {
    const std::size_t ts = std::min(t, T - 1);
    for (std::size_t c = 0; c < ch; ++c) {
      for (std::size_t xx = 0; xx < Xp; ++xx) {
        const std::size_t xs = std::min(xx, X - 1);
        for (std::size_t yy = 0; yy < Yp; ++yy) {
          g_x[g_x.idx(ts, c, xs, std::min(yy, Y - 1))] += g_pad[g_pad.idx(t, c, xx, yy)];
        }
      }
    }
  }
  return g_x;
}

Tensor upsample3d(const Tensor& x, const Tensor& w, const Tensor& b,
                  std::size_t t_out, std::size_t x_out, std::size_t y_out) {
  require_ndim("upsample3d input", x, 4);
  require_ndim("upsample3d kernel", w, 2);
  require_channels("upsample3d", x, w);
  const std::size_t T = x.dim(0), Ci = x.dim(1), X = x.dim(2), Y = x.dim(3);
  const std::size_t Co = w.dim(0);
  if (t_out > 2 * T || x_out > 2 * X || y_out > 2 * Y) {
    throw ShapeError("upsample3d target (" + std::to_string(t_out) + "," +
                     std::to_string(x_out) + "," + std::to_string(y_out) +
                     ") exceeds doubled input " + dims_to_string(x.dims()));
  }

  Tensor out({t_out, Co, x_out, y_out});
  if (!b.empty()) {
    for (std::size_t t = 0; t < t_out; ++t) {
      for (std::size_t o = 0; o < Co; ++o) {
        cplx* p = out.data() + out.idx(t, o, 0, 0);
        for (std::size_t i = 0; i < x_out * y_out; ++i) p[i] = b[o];
      }
    }
  }
  for (std::size_t t = 0; 2 * t < t_out; ++t) {
    for (std::size_t o = 0; o < Co; ++o) {
      for (std::size_t i = 0; i < Ci; ++i) {
        const cplx wv = w[w.idx(o, i)];
        const double wr = wv.real(), wi = wv.imag();
        for (std::size_t xx = 0; 2 * xx < x_out; ++xx) {
          const cplx* src = x.data() + x.idx(t, i, xx, 0);
          cplx* dst = out.data() + out.idx(2 * t, o, 2 * xx, 0);
          for (std::size_t yy = 0; 2 * yy < y_out; ++yy) {
            const double xr = src[yy].real(), xi = src[yy].imag();
            dst[2 * yy] += cplx(wr * xr - wi * xi, wr * xi + wi * xr);
          }
        }
      }
    }
  }
  return out;
}

Tensor upsample3d_backward(const Tensor& x, const Tensor& w, const Tensor& g_out,
                           Tensor& g_w, Tensor& g_b) {
  const std::size_t T = x.dim(0), Ci = x.dim(1), X = x.dim(2), Y = x.dim(3);
  const std::size_t Co = w.dim(0);
  const std::size_t t_out = g_out.dim(0), x_out = g_out.dim(2), y_out = g_out.dim(3);

  Tensor g_x({T, Ci, X, Y});
  for (std::size_t t = 0; 2 * t < t_out; ++t) {
    for (std::size_t o = 0; o < Co; ++o) {
      for (std::size_t i = 0; i < Ci; ++i) {
        const cplx wc = std::conj(w[w.idx(o, i)]);
        cplx acc(0.0, 0.0);
        for (std::size_t xx = 0; 2 * xx < x_out; ++xx) {
          const cplx* g = g_out.data() + g_out.idx(2 * t, o, 2 * xx, 0);
          const cplx* src = x.data() + x.idx(t, i, xx, 0);
          cplx* dst = g_x.data() + g_x.idx(t, i, xx, 0);
          for (std::size_t yy = 0; 2 * yy < y_out; ++yy) {
            dst[yy] += wc * g[2 * yy];
            acc += std::conj(src[yy]) * g[2 * yy];
          }
        }
        g_w[g_w.idx(o, i)] += acc;
      }
    }
  }
  if (!g_b.empty()) {
    for (std::size_t t = 0; t < t_out; ++t) {
      for (std::size_t o = 0; o < Co; ++o) {
        const cplx* p = g_out.data() + g_out.idx(t, o, 0, 0);
        cplx acc(0.0, 0.0);
        for (std::size_t i = 0; i < x_out * y_out; ++i) acc += p[i];
        g_b[o] += acc;
      }
    }
  }
  return g_x;
}

AttentionWeights make_attention_weights(std::size_t axis_len, std::size_t ratio,
                                        Rng& rng) {
  if (ratio == 0) throw ConfigError("attention reduction ratio must be >= 1");
  const std::size_t full = 2 * axis_len;
  const std::size_t hidden = std::max<std::size_t>(1, full / ratio);
  AttentionWeights w;
  w.w1 = Tensor({hidden, full});
  w.b1 = Tensor({hidden});
  w.w2 = Tensor({full, hidden});
  w.b2 = Tensor({full});
  fill_normal_real(w.w1, rng, 1.0 / std::sqrt(static_cast<double>(full)));
  fill_normal_real(w.w2, rng, 1.0 / std::sqrt(static_cast<double>(hidden)));
  return w;
}

namespace {

void attention_dims(const Tensor& x, const AttentionWeights& w, std::size_t axis,
                    std::size_t& A, std::size_t& stride) {
  if (axis >= x.ndim()) {
    throw ShapeError("attention axis " + std::to_string(axis) +
                     " out of range for " + dims_to_string(x.dims()));
  }
  A = x.dim(axis);
  if (w.w2.dim(0) != 2 * A || w.w1.dim(1) != 2 * A) {
    throw ShapeError("attention weights sized for axis length " +
                     std::to_string(w.w2.dim(0) / 2) + ", input has " +
                     std::to_string(A));
  }
  stride = 1;
  for (std::size_t a = axis + 1; a < x.ndim(); ++a) stride *= x.dim(a);
}

}  // namespace

Tensor se_attention(const Tensor& x, const AttentionWeights& w, std::size_t axis,
                    AttentionContext& ctx) {
  std::size_t A, stride;
  attention_dims(x, w, axis, A, stride);
  const std::size_t full = 2 * A;
  const std::size_t hidden = w.w1.dim(0);

  ctx.pooled.assign(full, -std::numeric_limits<double>::infinity());
  ctx.argmax.assign(full, 0);
  for (std::size_t p = 0; p < x.size(); ++p) {
    const std::size_t j = (p / stride) % A;
    const double re = x[p].real(), im = x[p].imag();
    if (re > ctx.pooled[j]) {
      ctx.pooled[j] = re;
      ctx.argmax[j] = p;
    }
    if (im > ctx.pooled[A + j]) {
      ctx.pooled[A + j] = im;
      ctx.argmax[A + j] = p;
    }
  }

  ctx.z1.assign(hidden, 0.0);
  ctx.h.assign(hidden, 0.0);
  for (std::size_t o = 0; o < hidden; ++o) {
    double acc = w.b1[o].real();
    for (std::size_t k = 0; k < full; ++k) {
      acc += w.w1[w.w1.idx(o, k)].real() * ctx.pooled[k];
    }
    ctx.z1[o] = acc;
    ctx.h[o] = relu(acc);
  }
  ctx.z2.assign(full, 0.0);
  ctx.wv.assign(full, 0.0);
  for (std::size_t o = 0; o < full; ++o) {
    double acc = w.b2[o].real();
    for (std::size_t k = 0; k < hidden; ++k) {
      acc += w.w2[w.w2.idx(o, k)].real() * ctx.h[k];
    }
    ctx.z2[o] = acc;
    ctx.wv[o] = sigmoid(acc);
  }

  Tensor out(x.dims());
  for (std::size_t p = 0; p < x.size(); ++p) {
    const std::size_t j = (p / stride) % A;
    out[p] = cplx(x[p].real() * ctx.wv[j], x[p].imag() * ctx.wv[A + j]);
  }
  return out;
}

Tensor se_attention_backward(const Tensor& x, const AttentionWeights& w,
                             std::size_t axis, const AttentionContext& ctx,
                             const Tensor& g_out, AttentionWeights& g_w) {
  std::size_t A, stride;
  attention_dims(x, w, axis, A, stride);
  const std::size_t full = 2 * A;
  const std::size_t hidden = w.w1.dim(0);

  Tensor g_x(x.dims());
  std::vector<double> g_wv(full, 0.0);
  for (std::size_t p = 0; p < x.size(); ++p) {
    const std::size_t j = (p / stride) % A;
    g_x[p] = cplx(g_out[p].real() * ctx.wv[j], g_out[p].imag() * ctx.wv[A + j]);
    g_wv[j] += x[p].real() * g_out[p].real();
    g_wv[A + j] += x[p].imag() * g_out[p].imag();
  }

  std::vector<double> g_z2(full);
  for (std::size_t o = 0; o < full; ++o) {
    g_z2[o] = g_wv[o] * ctx.wv[o] * (1.0 - ctx.wv[o]);
    g_w.b2[o] += cplx(g_z2[o], 0.0);
  }
  std::vector<double> g_h(hidden, 0.0);
  for (std::size_t o = 0; o < full; ++o) {
    for (std::size_t k = 0; k < hidden; ++k) {
      g_h[k] += w.w2[w.w2.idx(o, k)].real() * g_z2[o];
      g_w.w2[g_w.w2.idx(o, k)] += cplx(g_z2[o] * ctx.h[k], 0.0);
    }
  }
  std::vector<double> g_z1(hidden);
  for (std::size_t k = 0; k < hidden; ++k) {
    g_z1[k] = (ctx.z1[k] > 0.0) ? g_h[k] : 0.0;
    g_w.b1[k] += cplx(g_z1[k], 0.0);
  }
  std::vector<double> g_pool(full, 0.0);
  for (std::size_t o = 0; o < hidden; ++o) {
    for (std::size_t k = 0; k < full; ++k) {
      g_pool[k] += w.w1[w.w1.idx(o, k)].real() * g_z1[o];
      g_w.w1[g_w.w1.idx(o, k)] += cplx(g_z1[o] * ctx.pooled[k], 0.0);
    }
  }
  for (std::size_t j = 0; j < A; ++j) {
    g_x[ctx.argmax[j]] += cplx(g_pool[j], 0.0);
    g_x[ctx.argmax[A + j]] += cplx(0.0, g_pool[A + j]);
  }
  return g_x;
}

}  // namespace aliknet
