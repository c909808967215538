#pragma once

#include <vector>

#include "aliknet/tensor.hpp"

namespace aliknet {

// Quality metrics on magnitude images. Inputs are (T, X, Y) complex cine
// stacks; all three metrics compare |pred| against |ref|.

// || |pred| - |ref| ||_2 / || |ref| ||_2 over all elements.
double nrmse(const Tensor& pred, const Tensor& ref);

// 10*log10(peak^2 / MSE), peak = max|ref|, capped at 300 dB when the MSE
// drops below 1e-30.
double psnr(const Tensor& pred, const Tensor& ref);

// Single-scale SSIM, 7x7 uniform window over valid positions, K1 = 0.01,
// K2 = 0.03, population moments; computed per frame, then averaged.
// dynamic_range < 0 means "use max|ref|".
double ssim(const Tensor& pred, const Tensor& ref, double dynamic_range = -1.0);

struct MetricReport {
  double nrmse = 0.0, psnr_db = 0.0, ssim = 0.0;
  std::vector<double> nrmse_frames, psnr_frames, ssim_frames;
};

MetricReport evaluate(const Tensor& pred, const Tensor& ref);

}  // namespace aliknet
