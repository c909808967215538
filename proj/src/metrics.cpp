#include "aliknet/metrics.hpp"

#include <algorithm>
#include <cmath>

#include "aliknet/errors.hpp"

namespace aliknet {

namespace {

constexpr std::size_t kWindow = 7;
constexpr double kK1 = 0.01, kK2 = 0.03;
constexpr double kPsnrCap = 300.0, kMseFloor = 1e-30;

std::vector<double> magnitudes(const Tensor& t) {
  std::vector<double> m(t.size());
  for (std::size_t i = 0; i < t.size(); ++i) m[i] = std::abs(t[i]);
  return m;
}

double peak_of(const std::vector<double>& ref) {
  double p = 0.0;
  for (double v : ref) p = std::max(p, v);
  return p;
}

double mse_of(const std::vector<double>& a, const std::vector<double>& b,
              std::size_t lo, std::size_t hi) {
  double acc = 0.0;
  for (std::size_t i = lo; i < hi; ++i) {
    const double d = a[i] - b[i];
    acc += d * d;
  }
  return acc / static_cast<double>(hi - lo);
}

double psnr_from_mse(double mse, double peak) {
  if (mse < kMseFloor) return kPsnrCap;
  return 10.0 * std::log10(peak * peak / mse);
}

// SSIM of one frame laid out row-major (X, Y), averaged over all fully
// interior window positions.
double ssim_frame(const double* p, const double* r, std::size_t X, std::size_t Y,
                  double c1, double c2) {
  const double inv_n = 1.0 / static_cast<double>(kWindow * kWindow);
  double acc = 0.0;
  std::size_t count = 0;
  for (std::size_t x0 = 0; x0 + kWindow <= X; ++x0) {
    for (std::size_t y0 = 0; y0 + kWindow <= Y; ++y0) {
      double sp = 0, sr = 0, spp = 0, srr = 0, spr = 0;
      for (std::size_t i = 0; i < kWindow; ++i) {
        const double* prow = p + (x0 + i) * Y + y0;
        const double* rrow = r + (x0 + i) * Y + y0;
        for (std::size_t j = 0; j < kWindow; ++j) {
          sp += prow[j];
          sr += rrow[j];
          spp += prow[j] * prow[j];
          srr += rrow[j] * rrow[j];
          spr += prow[j] * rrow[j];
        }
      }
      const double mp = sp * inv_n, mr = sr * inv_n;
      const double vp = spp * inv_n - mp * mp;
      const double vr = srr * inv_n - mr * mr;
      const double cov = spr * inv_n - mp * mr;
      const double num = (2.0 * mp * mr + c1) * (2.0 * cov + c2);
      const double den = (mp * mp + mr * mr + c1) * (vp + vr + c2);
      acc += num / den;
      ++count;
    }
  }
  return acc / static_cast<double>(count);
}

void require_pair(const Tensor& pred, const Tensor& ref) {
  require_same_dims("metric", pred, ref);
  require_ndim("metric", pred, 3);
}

}  // namespace

double nrmse(const Tensor& pred, const Tensor& ref) {
  require_pair(pred, ref);
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    const double d = std::abs(pred[i]) - std::abs(ref[i]);
    num += d * d;
    den += std::abs(ref[i]) * std::abs(ref[i]);
  }
  if (den == 0.0) throw NumericError("nrmse undefined for an all-zero reference");
  return std::sqrt(num / den);
}

double psnr(const Tensor& pred, const Tensor& ref) {
  require_pair(pred, ref);
  const std::vector<double> p = magnitudes(pred), r = magnitudes(ref);
  return psnr_from_mse(mse_of(p, r, 0, p.size()), peak_of(r));
}

double ssim(const Tensor& pred, const Tensor& ref, double dynamic_range) {
  require_pair(pred, ref);
  const std::size_t T = pred.dim(0), X = pred.dim(1), Y = pred.dim(2);
  if (X < kWindow || Y < kWindow) {
    throw ConfigError("ssim frame smaller than the 7x7 window");
  }
  const std::vector<double> p = magnitudes(pred), r = magnitudes(ref);
  const double L = dynamic_range < 0.0 ? peak_of(r) : dynamic_range;
  if (L == 0.0) throw NumericError("ssim undefined for a zero dynamic range");
  const double c1 = (kK1 * L) * (kK1 * L), c2 = (kK2 * L) * (kK2 * L);
  double acc = 0.0;
  for (std::size_t t = 0; t < T; ++t) {
    acc += ssim_frame(p.data() + t * X * Y, r.data() + t * X * Y, X, Y, c1, c2);
  }
  return acc / static_cast<double>(T);
}

MetricReport evaluate(const Tensor& pred, const Tensor& ref) {
  require_pair(pred, ref);
  MetricReport rep;
  rep.nrmse = nrmse(pred, ref);
  rep.psnr_db = psnr(pred, ref);
  rep.ssim = ssim(pred, ref);

  const std::size_t T = pred.dim(0), X = pred.dim(1), Y = pred.dim(2);
  const std::vector<double> p = magnitudes(pred), r = magnitudes(ref);
  const double peak = peak_of(r);
  const double L = peak;
  const double c1 = (kK1 * L) * (kK1 * L), c2 = (kK2 * L) * (kK2 * L);
  for (std::size_t t = 0; t < T; ++t) {
    const std::size_t lo = t * X * Y, hi = (t + 1) * X * Y;
    double num = 0.0, den = 0.0;
    for (std::size_t i = lo; i < hi; ++i) {
      const double d = p[i] - r[i];
      num += d * d;
      den += r[i] * r[i];
    }
    rep.nrmse_frames.push_back(den > 0.0 ? std::sqrt(num / den) : 0.0);
    rep.psnr_frames.push_back(psnr_from_mse(mse_of(p, r, lo, hi), peak));
    rep.ssim_frames.push_back(ssim_frame(p.data() + lo, r.data() + lo, X, Y, c1, c2));
  }
  return rep;
}

}  // namespace aliknet
