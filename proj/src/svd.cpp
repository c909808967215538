#include "aliknet/svd.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace aliknet {

namespace {

constexpr int kMaxSweeps = 60;
constexpr double kOrthTol = 1e-15;

// Hestenes one-sided Jacobi for m >= n.  w and v are column-major; v must be
// the n x n identity on entry and accumulates the right rotations.
void jacobi_sweeps(std::vector<cplx>& w, std::vector<cplx>& v, std::size_t m,
                   std::size_t n) {
  for (int sweep = 0; sweep < kMaxSweeps; ++sweep) {
    bool changed = false;
    for (std::size_t p = 0; p + 1 < n; ++p) {
      for (std::size_t q = p + 1; q < n; ++q) {
        cplx* wp = w.data() + p * m;
        cplx* wq = w.data() + q * m;
        double alpha = 0.0, beta = 0.0;
        cplx gamma(0.0, 0.0);
        for (std::size_t i = 0; i < m; ++i) {
          alpha += std::norm(wp[i]);
          beta += std::norm(wq[i]);
          gamma += std::conj(wp[i]) * wq[i];
        }
        const double ag = std::abs(gamma);
        if (ag <= kOrthTol * std::sqrt(alpha * beta) || ag == 0.0) continue;
        changed = true;
        // phase factor turning the 2x2 Gram block real, then a real Jacobi
        // rotation zeroing its off-diagonal
        const cplx e = std::conj(gamma) / ag;
        const double zeta = (beta - alpha) / (2.0 * ag);
        double t;
        if (zeta == 0.0) {
          t = 1.0;
        } else {
          t = ((zeta > 0.0) ? 1.0 : -1.0) /
              (std::abs(zeta) + std::sqrt(1.0 + zeta * zeta));
        }
        const double c = 1.0 / std::sqrt(1.0 + t * t);
        const double s = c * t;
        for (std::size_t i = 0; i < m; ++i) {
          const cplx a = wp[i];
          const cplx b = e * wq[i];
          wp[i] = c * a - s * b;
          wq[i] = s * a + c * b;
        }
        cplx* vp = v.data() + p * n;
        cplx* vq = v.data() + q * n;
        for (std::size_t i = 0; i < n; ++i) {
          const cplx a = vp[i];
          const cplx b = e * vq[i];
          vp[i] = c * a - s * b;
          vq[i] = s * a + c * b;
        }
      }
    }
    if (!changed) return;
  }
  throw NumericError("svd did not converge within " + std::to_string(kMaxSweeps) +
                     " sweeps");
}

SvdResult svd_tall(const std::vector<cplx>& a, std::size_t m, std::size_t n) {
  std::vector<cplx> w = a;
  std::vector<cplx> v(n * n, cplx(0.0, 0.0));
  for (std::size_t i = 0; i < n; ++i) v[i * n + i] = cplx(1.0, 0.0);
  jacobi_sweeps(w, v, m, n);

  std::vector<double> sig(n);
  for (std::size_t j = 0; j < n; ++j) {
    double acc = 0.0;
    for (std::size_t i = 0; i < m; ++i) acc += std::norm(w[j * m + i]);
    sig[j] = std::sqrt(acc);
  }
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t x, std::size_t y) { return sig[x] > sig[y]; });

  SvdResult r;
  r.m = m;
  r.n = n;
  r.r = n;
  r.s.resize(n);
  r.u.assign(m * n, cplx(0.0, 0.0));
  r.v.assign(n * n, cplx(0.0, 0.0));
  for (std::size_t k = 0; k < n; ++k) {
    const std::size_t j = order[k];
    r.s[k] = sig[j];
    if (sig[j] > 0.0) {
      const double inv = 1.0 / sig[j];
      for (std::size_t i = 0; i < m; ++i) r.u[k * m + i] = inv * w[j * m + i];
    }
    for (std::size_t i = 0; i < n; ++i) r.v[k * n + i] = v[j * n + i];
  }
  return r;
}

}  // namespace

SvdResult svd_jacobi(const std::vector<cplx>& a, std::size_t m, std::size_t n) {
  if (a.size() != m * n || m == 0 || n == 0) {
    throw ShapeError("svd input size " + std::to_string(a.size()) +
                     " does not match " + std::to_string(m) + "x" +
                     std::to_string(n));
  }
  for (const cplx& z : a) {
    if (!std::isfinite(z.real()) || !std::isfinite(z.imag())) {
      throw NumericError("svd input contains non-finite values");
    }
  }
  if (m >= n) return svd_tall(a, m, n);

  // wide matrix: decompose the conjugate transpose and swap factors
  std::vector<cplx> at(n * m);
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      at[i * n + j] = std::conj(a[j * m + i]);
    }
  }
  SvdResult t = svd_tall(at, n, m);
  SvdResult r;
  r.m = m;
  r.n = n;
  r.r = t.r;
  r.s = std::move(t.s);
  r.u = std::move(t.v);
  r.v = std::move(t.u);
  return r;
}

}  // namespace aliknet
