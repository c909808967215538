#pragma once

#include <vector>

#include "aliknet/rng.hpp"
#include "aliknet/tensor.hpp"

namespace aliknet {

// Axis conventions used throughout:
//   coil-combined image   (T, X, Y)
//   multi-coil k-space    (T, C, X, Y)
//   coil maps             (C, X, Y)
//   sampling mask         (T, Y)  -- Cartesian phase-encode lines, broadcast
//                                    along the readout axis X and the coils

/// Cartesian line mask.  Keeps round(Y/R) lines per frame (clamped to at
/// least center_lines), always includes the central center_lines block, and
/// draws the rest without replacement with weight 1/(1 + distance) from a
/// density peak that sweeps around the center from frame to frame.
/// Throws ConfigError when round(Y/R) < 1.
Tensor generate_mask(std::size_t T, std::size_t Y, double accel,
                     std::size_t center_lines, Rng& rng);

/// Smooth Gaussian-lobe coil sensitivities with per-coil linear phase ramps,
/// centers spaced at angles 2*pi*(c+0.5)/C, normalized so sum_c |S_c|^2 = 1
/// at every pixel.  Deterministic in its arguments.
Tensor generate_coil_maps(std::size_t C, std::size_t X, std::size_t Y);

/// Dynamic phantom: static background ellipses plus an annulus whose inner
/// radius oscillates sinusoidally with one full period across the T frames,
/// a smooth static spatial phase, magnitude normalized to [0, 1].
Tensor generate_phantom(std::size_t T, std::size_t X, std::size_t Y, Rng& rng);

/// y[t,c] = F(S_c * x[t]) with the centered unitary 2-d Fourier transform.
Tensor fs_forward(const Tensor& x, const Tensor& maps);
/// x[t] = sum_c conj(S_c) * F^{-1}(y[t,c]).
Tensor fs_adjoint(const Tensor& y, const Tensor& maps);

/// Zero out unsampled lines: out[t,c,x,y] = y[t,c,x,y] * mask[t,y].
Tensor apply_mask(const Tensor& y, const Tensor& mask);

/// Undersampled encoding operator A = M F S and its adjoint.
struct EncodingOperator {
  Tensor maps;  // (C, X, Y)
  Tensor mask;  // (T, Y)

  Tensor forward(const Tensor& x) const { return apply_mask(fs_forward(x, maps), mask); }
  Tensor adjoint(const Tensor& y) const { return fs_adjoint(apply_mask(y, mask), maps); }
};

/// One synthetic training/evaluation example.
struct CineSample {
  Tensor reference;     // (T, X, Y), max magnitude 1
  Tensor full_kspace;   // (T, C, X, Y) = FS(reference)
  Tensor under_kspace;  // mask ⊙ full_kspace
  Tensor mask;          // (T, Y)
  Tensor maps;          // (C, X, Y)
  double acceleration = 1.0;
};

CineSample make_sample(std::size_t T, std::size_t X, std::size_t Y, std::size_t C,
                       double accel, std::size_t center_lines, Rng& rng);

/// count samples with per-sample seeds base_seed + index and acceleration
/// drawn uniformly from [r_min, r_max].
std::vector<CineSample> make_dataset(std::size_t count, std::size_t T, std::size_t X,
                                     std::size_t Y, std::size_t C, double r_min,
                                     double r_max, std::size_t center_lines,
                                     std::uint64_t base_seed);

}  // namespace aliknet
