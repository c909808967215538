#include "aliknet/fft.hpp"

#include <cmath>
#include <numbers>
#include <optional>
#include <vector>

namespace aliknet {

namespace {

bool is_pow2(std::size_t n) { return n != 0 && (n & (n - 1)) == 0; }

std::size_t next_pow2(std::size_t n) {
  std::size_t p = 1;
  while (p < n) p <<= 1;
  return p;
}

// exp(sign * 2*pi*i * j / n) for j < n/2
std::vector<cplx> twiddles(std::size_t n, int sign) {
  std::vector<cplx> tw(n / 2);
  const double base = sign * 2.0 * std::numbers::pi / static_cast<double>(n);
  for (std::size_t j = 0; j < n / 2; ++j) {
    const double a = base * static_cast<double>(j);
    tw[j] = cplx(std::cos(a), std::sin(a));
  }
  return tw;
}

void radix2(cplx* a, std::size_t n, const std::vector<cplx>& tw) {
  for (std::size_t i = 1, j = 0; i < n; ++i) {
    std::size_t bit = n >> 1;
    for (; j & bit; bit >>= 1) j ^= bit;
    j ^= bit;
    if (i < j) std::swap(a[i], a[j]);
  }
  for (std::size_t len = 2; len <= n; len <<= 1) {
    const std::size_t half = len / 2;
    const std::size_t step = n / len;
    for (std::size_t i = 0; i < n; i += len) {
      for (std::size_t k = 0; k < half; ++k) {
        const cplx w = tw[k * step];
        const cplx u = a[i + k];
        const cplx v = a[i + k + half] * w;
        a[i + k] = u + v;
        a[i + k + half] = u - v;
      }
    }
  }
}

// Bluestein chirp-z machinery for one (n, sign) pair, reused across lines.
struct Bluestein {
  std::size_t n, m;
  std::vector<cplx> chirp;    // c_j = exp(sign*pi*i*j^2/n)
  std::vector<cplx> bhat;     // FFT_m of the wrapped conjugate chirp
  std::vector<cplx> tw_fwd, tw_inv;

  Bluestein(std::size_t n_, int sign) : n(n_), m(next_pow2(2 * n_ - 1)) {
    chirp.resize(n);
    const double base = sign * std::numbers::pi / static_cast<double>(n);
    for (std::size_t j = 0; j < n; ++j) {
      // j^2 mod 2n keeps the argument small and exact
      const double q = static_cast<double>((j * j) % (2 * n));
      chirp[j] = cplx(std::cos(base * q), std::sin(base * q));
    }
    tw_fwd = twiddles(m, -1);
    tw_inv = twiddles(m, +1);
    std::vector<cplx> b(m, cplx(0.0, 0.0));
    b[0] = std::conj(chirp[0]);
    for (std::size_t j = 1; j < n; ++j) {
      b[j] = std::conj(chirp[j]);
      b[m - j] = std::conj(chirp[j]);
    }
    radix2(b.data(), m, tw_fwd);
    bhat = std::move(b);
  }

  void transform(cplx* line) const {
    std::vector<cplx> a(m, cplx(0.0, 0.0));
    for (std::size_t j = 0; j < n; ++j) a[j] = line[j] * chirp[j];
    radix2(a.data(), m, tw_fwd);
    for (std::size_t j = 0; j < m; ++j) a[j] *= bhat[j];
    radix2(a.data(), m, tw_inv);
    const double inv_m = 1.0 / static_cast<double>(m);
    for (std::size_t k = 0; k < n; ++k) line[k] = chirp[k] * (a[k] * inv_m);
  }
};

}  // namespace

void fft_axis_inplace(Tensor& t, std::size_t axis, int sign) {
  if (axis >= t.ndim()) {
    throw ShapeError("fft axis " + std::to_string(axis) + " out of range for " +
                     dims_to_string(t.dims()));
  }
  const std::size_t n = t.dim(axis);
  if (n == 1) return;
  std::size_t stride = 1;
  for (std::size_t a = axis + 1; a < t.ndim(); ++a) stride *= t.dim(a);
  const std::size_t outer = t.size() / (n * stride);

  std::vector<cplx> line(n);
  const bool pow2 = is_pow2(n);
  std::vector<cplx> tw;
  std::optional<Bluestein> blue;
  if (pow2) {
    tw = twiddles(n, sign);
  } else {
    blue.emplace(n, sign);
  }

  for (std::size_t o = 0; o < outer; ++o) {
    for (std::size_t in = 0; in < stride; ++in) {
      cplx* base = t.data() + (o * n) * stride + in;
      for (std::size_t k = 0; k < n; ++k) line[k] = base[k * stride];
      if (pow2) {
        radix2(line.data(), n, tw);
      } else {
        blue->transform(line.data());
      }
      for (std::size_t k = 0; k < n; ++k) base[k * stride] = line[k];
    }
  }
}

Tensor roll_axis(const Tensor& t, std::size_t axis, std::size_t amount) {
  const std::size_t n = t.dim(axis);
  amount %= n;
  if (amount == 0) return t;
  std::size_t stride = 1;
  for (std::size_t a = axis + 1; a < t.ndim(); ++a) stride *= t.dim(a);
  const std::size_t outer = t.size() / (n * stride);
  Tensor out(t.dims());
  for (std::size_t o = 0; o < outer; ++o) {
    for (std::size_t k = 0; k < n; ++k) {
      const std::size_t kd = (k + amount) % n;
      const cplx* src = t.data() + (o * n + k) * stride;
      cplx* dst = out.data() + (o * n + kd) * stride;
      for (std::size_t in = 0; in < stride; ++in) dst[in] = src[in];
    }
  }
  return out;
}

namespace {

Tensor centered2(const Tensor& t, int sign) {
  if (t.ndim() < 2) {
    throw ShapeError("centered 2-d transform needs >= 2 axes, got " +
                     dims_to_string(t.dims()));
  }
  const std::size_t ax = t.ndim() - 2;
  const std::size_t ay = t.ndim() - 1;
  const std::size_t nx = t.dim(ax), ny = t.dim(ay);
  // ifftshift: shift by ceil(n/2); fftshift: shift by floor(n/2)
  Tensor u = roll_axis(t, ax, nx - nx / 2);
  u = roll_axis(u, ay, ny - ny / 2);
  fft_axis_inplace(u, ax, sign);
  fft_axis_inplace(u, ay, sign);
  u = roll_axis(u, ax, nx / 2);
  u = roll_axis(u, ay, ny / 2);
  const double s = 1.0 / std::sqrt(static_cast<double>(nx) * static_cast<double>(ny));
  for (std::size_t i = 0; i < u.size(); ++i) u[i] *= s;
  return u;
}

}  // namespace

Tensor fft2c(const Tensor& t) { return centered2(t, -1); }

Tensor ifft2c(const Tensor& t) { return centered2(t, +1); }

}  // namespace aliknet
