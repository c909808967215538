#include "aliknet/mri.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "aliknet/fft.hpp"

namespace aliknet {

namespace {

double circular_distance(double a, double b, double n) {
  const double d = std::abs(a - b);
  return std::min(d, n - d);
}

}  // namespace

Tensor generate_mask(std::size_t T, std::size_t Y, double accel,
                     std::size_t center_lines, Rng& rng) {
  if (accel < 1.0) {
    throw ConfigError("acceleration " + std::to_string(accel) + " is below 1");
  }
  if (center_lines > Y) {
    throw ConfigError("center_lines " + std::to_string(center_lines) +
                      " exceeds phase-encode count " + std::to_string(Y));
  }
  const long target = std::lround(static_cast<double>(Y) / accel);
  if (target < 1) {
    throw ConfigError("acceleration " + std::to_string(accel) +
                      " infeasible: keeps no lines out of " + std::to_string(Y));
  }
  const std::size_t n_keep =
      std::max<std::size_t>(static_cast<std::size_t>(target), std::max<std::size_t>(center_lines, 1));

  const std::size_t c_lo = Y / 2 - center_lines / 2;
  const std::size_t c_hi = c_lo + center_lines;

  Tensor mask({T, Y});
  for (std::size_t t = 0; t < T; ++t) {
    std::vector<char> keep(Y, 0);
    std::size_t kept = 0;
    for (std::size_t y = c_lo; y < c_hi; ++y) {
      keep[y] = 1;
      ++kept;
    }
    // density peak sweeps around the ky center so adjacent frames sample
    // different line patterns
    const double peak =
        static_cast<double>(Y) / 2.0 +
        (static_cast<double>(Y) / 8.0) *
            std::sin(2.0 * std::numbers::pi * static_cast<double>(t) /
                     static_cast<double>(T));
    std::vector<std::size_t> cand;
    std::vector<double> weight;
    for (std::size_t y = 0; y < Y; ++y) {
      if (keep[y]) continue;
      cand.push_back(y);
      weight.push_back(1.0 / (1.0 + circular_distance(static_cast<double>(y), peak,
                                                      static_cast<double>(Y))));
    }
    while (kept < n_keep && !cand.empty()) {
      double total = 0.0;
      for (double w : weight) total += w;
      const double u = rng.uniform() * total;
      double acc = 0.0;
      std::size_t pick = cand.size() - 1;
      for (std::size_t i = 0; i < cand.size(); ++i) {
        acc += weight[i];
        if (u < acc) {
          pick = i;
          break;
        }
      }
      keep[cand[pick]] = 1;
      ++kept;
      cand.erase(cand.begin() + static_cast<std::ptrdiff_t>(pick));
      weight.erase(weight.begin() + static_cast<std::ptrdiff_t>(pick));
    }
    for (std::size_t y = 0; y < Y; ++y) {
      mask[mask.idx(t, y)] = cplx(keep[y] ? 1.0 : 0.0, 0.0);
    }
  }
  return mask;
}

Tensor generate_coil_maps(std::size_t C, std::size_t X, std::size_t Y) {
  if (C == 0) throw ConfigError("coil count must be >= 1");
  Tensor maps({C, X, Y});
  const double cx = (static_cast<double>(X) - 1.0) / 2.0;
  const double cy = (static_cast<double>(Y) - 1.0) / 2.0;
  const double mn = static_cast<double>(std::min(X, Y));
  const double rho = 0.45 * mn;
  const double sigma = 0.55 * mn;
  for (std::size_t c = 0; c < C; ++c) {
    const double theta = 2.0 * std::numbers::pi *
                         (static_cast<double>(c) + 0.5) / static_cast<double>(C);
    const double lx = cx + rho * std::cos(theta);
    const double ly = cy + rho * std::sin(theta);
    // gentle linear phase ramp along the coil's viewing direction
    const double kx = 0.35 * std::cos(theta) * 2.0 * std::numbers::pi / static_cast<double>(X);
    const double ky = 0.35 * std::sin(theta) * 2.0 * std::numbers::pi / static_cast<double>(Y);
    const double phase0 = 0.4 * static_cast<double>(c);
    for (std::size_t x = 0; x < X; ++x) {
      for (std::size_t y = 0; y < Y; ++y) {
        const double dx = static_cast<double>(x) - lx;
        const double dy = static_cast<double>(y) - ly;
        const double mag = std::exp(-(dx * dx + dy * dy) / (2.0 * sigma * sigma));
        const double ph = kx * (static_cast<double>(x) - cx) +
                          ky * (static_cast<double>(y) - cy) + phase0;
        maps[maps.idx(c, x, y)] = mag * cplx(std::cos(ph), std::sin(ph));
      }
    }
  }
  // pixelwise normalization: sum_c |S_c|^2 = 1
  for (std::size_t x = 0; x < X; ++x) {
    for (std::size_t y = 0; y < Y; ++y) {
      double ss = 0.0;
      for (std::size_t c = 0; c < C; ++c) ss += std::norm(maps[maps.idx(c, x, y)]);
      const double inv = 1.0 / std::sqrt(ss);
      for (std::size_t c = 0; c < C; ++c) maps[maps.idx(c, x, y)] *= inv;
    }
  }
  return maps;
}

namespace {

// soft ellipse membership: 1 inside, 0 outside, logistic transition
double soft_ellipse(double x, double y, double cx, double cy, double ax, double ay,
                    double feather) {
  const double dx = (x - cx) / ax;
  const double dy = (y - cy) / ay;
  const double d = std::sqrt(dx * dx + dy * dy);
  const double softness = feather / std::min(ax, ay);
  return 1.0 / (1.0 + std::exp((d - 1.0) / softness));
}

}  // namespace

Tensor generate_phantom(std::size_t T, std::size_t X, std::size_t Y, Rng& rng) {
  Tensor img({T, X, Y});
  const double cx = (static_cast<double>(X) - 1.0) / 2.0;
  const double cy = (static_cast<double>(Y) - 1.0) / 2.0;
  const double mn = static_cast<double>(std::min(X, Y));

  // randomized geometry, fixed across frames except the annulus inner radius
  const double body_ax = (0.40 + 0.04 * rng.uniform()) * static_cast<double>(X);
  const double body_ay = (0.40 + 0.04 * rng.uniform()) * static_cast<double>(Y);
  const double body_val = 0.30 + 0.10 * rng.uniform();

  const double ring_cx = cx + (rng.uniform() - 0.5) * 0.10 * static_cast<double>(X);
  const double ring_cy = cy + (rng.uniform() - 0.5) * 0.10 * static_cast<double>(Y);
  const double ring_outer = (0.24 + 0.04 * rng.uniform()) * mn;
  const double ring_inner_base = (0.55 + 0.10 * rng.uniform()) * ring_outer;
  const double ring_beat = 0.20 + 0.10 * rng.uniform();
  const double ring_val = 0.80 + 0.15 * rng.uniform();

  struct Blob {
    double cx, cy, ax, ay, val;
  };
  std::vector<Blob> blobs;
  for (int i = 0; i < 2; ++i) {
    Blob b;
    const double ang = 2.0 * std::numbers::pi * rng.uniform();
    const double rad = 0.30 * mn;
    b.cx = cx + rad * std::cos(ang);
    b.cy = cy + rad * std::sin(ang);
    b.ax = (0.06 + 0.05 * rng.uniform()) * static_cast<double>(X);
    b.ay = (0.06 + 0.05 * rng.uniform()) * static_cast<double>(Y);
    b.val = 0.25 + 0.20 * rng.uniform();
    blobs.push_back(b);
  }

  const double p_amp1 = 0.2 + 0.3 * rng.uniform();
  const double p_amp2 = 0.2 + 0.3 * rng.uniform();
  const double p_off1 = 2.0 * std::numbers::pi * rng.uniform();
  const double p_off2 = 2.0 * std::numbers::pi * rng.uniform();

  const double feather = 1.2;
  double peak = 0.0;
  for (std::size_t t = 0; t < T; ++t) {
    const double cycle = std::sin(2.0 * std::numbers::pi * static_cast<double>(t) /
                                  static_cast<double>(T));
    const double ring_inner = ring_inner_base * (1.0 + ring_beat * cycle);
    for (std::size_t x = 0; x < X; ++x) {
      for (std::size_t y = 0; y < Y; ++y) {
        const double fx = static_cast<double>(x);
        const double fy = static_cast<double>(y);
        double v = body_val * soft_ellipse(fx, fy, cx, cy, body_ax, body_ay, feather);
        for (const Blob& b : blobs) {
          v += b.val * soft_ellipse(fx, fy, b.cx, b.cy, b.ax, b.ay, feather);
        }
        const double outer =
            soft_ellipse(fx, fy, ring_cx, ring_cy, ring_outer, ring_outer, feather);
        const double inner =
            soft_ellipse(fx, fy, ring_cx, ring_cy, ring_inner, ring_inner, feather);
        v += ring_val * std::max(0.0, outer - inner);
        const double ph =
            p_amp1 * std::sin(2.0 * std::numbers::pi * fx / static_cast<double>(X) + p_off1) +
            p_amp2 * std::cos(2.0 * std::numbers::pi * fy / static_cast<double>(Y) + p_off2);
        img[img.idx(t, x, y)] = v * cplx(std::cos(ph), std::sin(ph));
        peak = std::max(peak, std::abs(v));
      }
    }
  }
  const double inv = 1.0 / peak;
  for (std::size_t i = 0; i < img.size(); ++i) img[i] *= inv;
  return img;
}

Tensor fs_forward(const Tensor& x, const Tensor& maps) {
  require_ndim("fs_forward image", x, 3);
  require_ndim("fs_forward maps", maps, 3);
  const std::size_t T = x.dim(0), X = x.dim(1), Y = x.dim(2);
  const std::size_t C = maps.dim(0);
  if (maps.dim(1) != X || maps.dim(2) != Y) {
    throw ShapeError("fs_forward: image " + dims_to_string(x.dims()) +
                     " and maps " + dims_to_string(maps.dims()) + " disagree");
  }
  Tensor y({T, C, X, Y});
  const std::size_t plane = X * Y;
  for (std::size_t t = 0; t < T; ++t) {
    for (std::size_t c = 0; c < C; ++c) {
      const cplx* xi = x.data() + t * plane;
      const cplx* si = maps.data() + c * plane;
      cplx* yo = y.data() + (t * C + c) * plane;
      for (std::size_t i = 0; i < plane; ++i) yo[i] = si[i] * xi[i];
    }
  }
  return fft2c(y);
}

Tensor fs_adjoint(const Tensor& y, const Tensor& maps) {
  require_ndim("fs_adjoint kspace", y, 4);
  require_ndim("fs_adjoint maps", maps, 3);
  const std::size_t T = y.dim(0), C = y.dim(1), X = y.dim(2), Yd = y.dim(3);
  if (maps.dim(0) != C || maps.dim(1) != X || maps.dim(2) != Yd) {
    throw ShapeError("fs_adjoint: kspace " + dims_to_string(y.dims()) +
                     " and maps " + dims_to_string(maps.dims()) + " disagree");
  }
  const Tensor u = ifft2c(y);
  Tensor x({T, X, Yd});
  const std::size_t plane = X * Yd;
  for (std::size_t t = 0; t < T; ++t) {
    cplx* xo = x.data() + t * plane;
    for (std::size_t c = 0; c < C; ++c) {
      const cplx* ui = u.data() + (t * C + c) * plane;
      const cplx* si = maps.data() + c * plane;
      for (std::size_t i = 0; i < plane; ++i) xo[i] += std::conj(si[i]) * ui[i];
    }
  }
  return x;
}

Tensor apply_mask(const Tensor& y, const Tensor& mask) {
  require_ndim("apply_mask kspace", y, 4);
  require_ndim("apply_mask mask", mask, 2);
  const std::size_t T = y.dim(0), C = y.dim(1), X = y.dim(2), Yd = y.dim(3);
  if (mask.dim(0) != T || mask.dim(1) != Yd) {
    throw ShapeError("apply_mask: kspace " + dims_to_string(y.dims()) +
                     " and mask " + dims_to_string(mask.dims()) + " disagree");
  }
  Tensor out({T, C, X, Yd});
  for (std::size_t t = 0; t < T; ++t) {
    for (std::size_t c = 0; c < C; ++c) {
      for (std::size_t x = 0; x < X; ++x) {
        const cplx* yi = y.data() + ((t * C + c) * X + x) * Yd;
        cplx* yo = out.data() + ((t * C + c) * X + x) * Yd;
        const cplx* m = mask.data() + t * Yd;
        for (std::size_t yy = 0; yy < Yd; ++yy) {
          yo[yy] = (m[yy].real() != 0.0) ? yi[yy] : cplx(0.0, 0.0);
        }
      }
    }
  }
  return out;
}

CineSample make_sample(std::size_t T, std::size_t X, std::size_t Y, std::size_t C,
                       double accel, std::size_t center_lines, Rng& rng) {
  CineSample s;
  s.reference = generate_phantom(T, X, Y, rng);
  s.maps = generate_coil_maps(C, X, Y);
  s.mask = generate_mask(T, Y, accel, center_lines, rng);
  s.full_kspace = fs_forward(s.reference, s.maps);
  s.under_kspace = apply_mask(s.full_kspace, s.mask);
  s.acceleration = accel;
  return s;
}

std::vector<CineSample> make_dataset(std::size_t count, std::size_t T, std::size_t X,
                                     std::size_t Y, std::size_t C, double r_min,
                                     double r_max, std::size_t center_lines,
                                     std::uint64_t base_seed) {
  if (r_min < 1.0 || r_max < r_min) {
    throw ConfigError("acceleration range [" + std::to_string(r_min) + ", " +
                      std::to_string(r_max) + "] is invalid");
  }
  std::vector<CineSample> out;
  out.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    Rng rng(base_seed + i);
    const double accel = r_min + (r_max - r_min) * rng.uniform();
    out.push_back(make_sample(T, X, Y, C, accel, center_lines, rng));
  }
  return out;
}

}  // namespace aliknet
