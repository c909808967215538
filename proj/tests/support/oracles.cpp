#include "oracles.hpp"

#include <Eigen/Dense>
#include <Eigen/SVD>
#include <cmath>
#include <numbers>

namespace aliknet::testing {

std::vector<cplx> naive_dft(const std::vector<cplx>& x, int sign) {
  const std::size_t n = x.size();
  std::vector<cplx> out(n, cplx(0.0, 0.0));
  for (std::size_t k = 0; k < n; ++k) {
    cplx acc(0.0, 0.0);
    for (std::size_t j = 0; j < n; ++j) {
      const double a = sign * 2.0 * std::numbers::pi *
                       static_cast<double>(j * k % n) / static_cast<double>(n);
      acc += x[j] * cplx(std::cos(a), std::sin(a));
    }
    out[k] = acc;
  }
  return out;
}

namespace {

Tensor remap_axis(const Tensor& t, std::size_t axis, std::size_t amount) {
  const std::size_t n = t.dim(axis);
  std::size_t stride = 1;
  for (std::size_t a = axis + 1; a < t.ndim(); ++a) stride *= t.dim(a);
  const std::size_t outer = t.size() / (n * stride);
  Tensor out(t.dims());
  for (std::size_t o = 0; o < outer; ++o) {
    for (std::size_t k = 0; k < n; ++k) {
      for (std::size_t in = 0; in < stride; ++in) {
        out[(o * n + (k + amount) % n) * stride + in] = t[(o * n + k) * stride + in];
      }
    }
  }
  return out;
}

Tensor dft_axis(const Tensor& t, std::size_t axis, int sign) {
  const std::size_t n = t.dim(axis);
  std::size_t stride = 1;
  for (std::size_t a = axis + 1; a < t.ndim(); ++a) stride *= t.dim(a);
  const std::size_t outer = t.size() / (n * stride);
  Tensor out(t.dims());
  std::vector<cplx> line(n);
  for (std::size_t o = 0; o < outer; ++o) {
    for (std::size_t in = 0; in < stride; ++in) {
      for (std::size_t k = 0; k < n; ++k) line[k] = t[(o * n + k) * stride + in];
      const std::vector<cplx> res = naive_dft(line, sign);
      for (std::size_t k = 0; k < n; ++k) out[(o * n + k) * stride + in] = res[k];
    }
  }
  return out;
}

}  // namespace

Tensor naive_fft2c(const Tensor& t, int sign) {
  const std::size_t ax = t.ndim() - 2;
  const std::size_t ay = t.ndim() - 1;
  const std::size_t nx = t.dim(ax), ny = t.dim(ay);
  Tensor u = remap_axis(t, ax, nx - nx / 2);
  u = remap_axis(u, ay, ny - ny / 2);
  u = dft_axis(u, ax, sign);
  u = dft_axis(u, ay, sign);
  u = remap_axis(u, ax, nx / 2);
  u = remap_axis(u, ay, ny / 2);
  const double s = 1.0 / std::sqrt(static_cast<double>(nx * ny));
  for (std::size_t i = 0; i < u.size(); ++i) u[i] *= s;
  return u;
}

Tensor naive_conv2d_xy(const Tensor& x, const Tensor& w, const Tensor& b) {
  const std::size_t T = x.dim(0), Ci = x.dim(1), X = x.dim(2), Y = x.dim(3);
  const std::size_t Co = w.dim(0), kx = w.dim(2), ky = w.dim(3);
  const std::ptrdiff_t cx = kx / 2, cy = ky / 2;
  Tensor out({T, Co, X, Y});
  for (std::size_t t = 0; t < T; ++t) {
    for (std::size_t o = 0; o < Co; ++o) {
      for (std::size_t xx = 0; xx < X; ++xx) {
        for (std::size_t yy = 0; yy < Y; ++yy) {
          cplx acc = b.empty() ? cplx(0.0, 0.0) : b[o];
          for (std::size_t i = 0; i < Ci; ++i) {
            for (std::size_t dx = 0; dx < kx; ++dx) {
              for (std::size_t dy = 0; dy < ky; ++dy) {
                const std::ptrdiff_t sx = static_cast<std::ptrdiff_t>(xx + dx) - cx;
                const std::ptrdiff_t sy = static_cast<std::ptrdiff_t>(yy + dy) - cy;
                if (sx < 0 || sy < 0 || sx >= static_cast<std::ptrdiff_t>(X) ||
                    sy >= static_cast<std::ptrdiff_t>(Y)) {
                  continue;
                }
                acc += w[w.idx(o, i, dx, dy)] * x[x.idx(t, i, sx, sy)];
              }
            }
          }
          out[out.idx(t, o, xx, yy)] = acc;
        }
      }
    }
  }
  return out;
}

Tensor naive_conv1d_t(const Tensor& x, const Tensor& w, const Tensor& b) {
  const std::size_t T = x.dim(0), Ci = x.dim(1), X = x.dim(2), Y = x.dim(3);
  const std::size_t Co = w.dim(0), kt = w.dim(2);
  const std::ptrdiff_t ct = kt / 2;
  Tensor out({T, Co, X, Y});
  for (std::size_t t = 0; t < T; ++t) {
    for (std::size_t o = 0; o < Co; ++o) {
      for (std::size_t xx = 0; xx < X; ++xx) {
        for (std::size_t yy = 0; yy < Y; ++yy) {
          cplx acc = b.empty() ? cplx(0.0, 0.0) : b[o];
          for (std::size_t i = 0; i < Ci; ++i) {
            for (std::size_t dt = 0; dt < kt; ++dt) {
              const std::ptrdiff_t st = static_cast<std::ptrdiff_t>(t + dt) - ct;
              if (st < 0 || st >= static_cast<std::ptrdiff_t>(T)) continue;
              acc += w[w.idx(o, i, dt)] * x[x.idx(st, i, xx, yy)];
            }
          }
          out[out.idx(t, o, xx, yy)] = acc;
        }
      }
    }
  }
  return out;
}

Tensor naive_conv3d_cxy(const Tensor& x, const Tensor& w, const Tensor& b) {
  const std::size_t T = x.dim(0), Ci = x.dim(1), C = x.dim(2), X = x.dim(3),
                    Y = x.dim(4);
  const std::size_t Co = w.dim(0), kc = w.dim(2), kx = w.dim(3), ky = w.dim(4);
  const std::ptrdiff_t cc = kc / 2, cx = kx / 2, cy = ky / 2;
  Tensor out({T, Co, C, X, Y});
  for (std::size_t t = 0; t < T; ++t) {
    for (std::size_t o = 0; o < Co; ++o) {
      for (std::size_t c = 0; c < C; ++c) {
        for (std::size_t xx = 0; xx < X; ++xx) {
          for (std::size_t yy = 0; yy < Y; ++yy) {
            cplx acc = b.empty() ? cplx(0.0, 0.0) : b[o];
            for (std::size_t i = 0; i < Ci; ++i) {
              for (std::size_t dc = 0; dc < kc; ++dc) {
                for (std::size_t dx = 0; dx < kx; ++dx) {
                  for (std::size_t dy = 0; dy < ky; ++dy) {
                    const std::ptrdiff_t sc = static_cast<std::ptrdiff_t>(c + dc) - cc;
                    const std::ptrdiff_t sx = static_cast<std::ptrdiff_t>(xx + dx) - cx;
                    const std::ptrdiff_t sy = static_cast<std::ptrdiff_t>(yy + dy) - cy;
                    if (sc < 0 || sx < 0 || sy < 0 ||
                        sc >= static_cast<std::ptrdiff_t>(C) ||
                        sx >= static_cast<std::ptrdiff_t>(X) ||
                        sy >= static_cast<std::ptrdiff_t>(Y)) {
                      continue;
                    }
                    acc += w[w.idx(o, i, dc, dx, dy)] * x[x.idx(t, i, sc, sx, sy)];
                  }
                }
              }
            }
            out[out.idx(t, o, c, xx, yy)] = acc;
          }
        }
      }
    }
  }
  return out;
}

namespace {

Eigen::MatrixXcd to_eigen(const std::vector<cplx>& a, std::size_t m, std::size_t n) {
  Eigen::MatrixXcd mat(m, n);
  for (std::size_t j = 0; j < n; ++j) {
    for (std::size_t i = 0; i < m; ++i) mat(i, j) = a[j * m + i];
  }
  return mat;
}

}  // namespace

std::vector<double> eigen_singular_values(const std::vector<cplx>& a,
                                          std::size_t m, std::size_t n) {
  Eigen::JacobiSVD<Eigen::MatrixXcd> svd(to_eigen(a, m, n));
  std::vector<double> s(svd.singularValues().data(),
                        svd.singularValues().data() + svd.singularValues().size());
  return s;
}

std::vector<cplx> eigen_svt(const std::vector<cplx>& a, std::size_t m,
                            std::size_t n, double threshold) {
  Eigen::JacobiSVD<Eigen::MatrixXcd> svd(to_eigen(a, m, n),
                                         Eigen::ComputeThinU | Eigen::ComputeThinV);
  Eigen::VectorXd s = svd.singularValues();
  for (Eigen::Index i = 0; i < s.size(); ++i) {
    if (!(s(i) > threshold)) s(i) = 0.0;
  }
  Eigen::MatrixXcd rec =
      svd.matrixU() * s.asDiagonal() * svd.matrixV().adjoint();
  std::vector<cplx> out(m * n);
  for (std::size_t j = 0; j < n; ++j) {
    for (std::size_t i = 0; i < m; ++i) out[j * m + i] = rec(i, j);
  }
  return out;
}

}  // namespace aliknet::testing
