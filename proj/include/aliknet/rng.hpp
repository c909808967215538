#pragma once

#include <cstdint>

#include "aliknet/tensor.hpp"

namespace aliknet {

/// Counter-based pseudo-random generator: output i is a pure function of
/// (seed, i), so sequences are reproducible across platforms and independent
/// of call-site history.  Integer mixing follows the splitmix64 finalizer.
class Rng {
public:
  explicit Rng(std::uint64_t seed);

  std::uint64_t next_u64();
  /// Uniform in [0, 1).
  double uniform();
  /// Standard normal via Box-Muller (one spare cached).
  double normal();
  /// Independent standard-normal real and imaginary parts.
  cplx normal_cplx();
  /// Uniform integer in [0, n).
  std::uint64_t next_below(std::uint64_t n);

  /// Derived generator with an independent stream; deterministic in
  /// (seed, stream) and unaffected by draws from the parent.
  Rng fork(std::uint64_t stream) const;

private:
  std::uint64_t key_ = 0;
  std::uint64_t counter_ = 0;
  bool have_spare_ = false;
  double spare_ = 0.0;
};

/// Fills a tensor with independent complex gaussians scaled by stddev.
void fill_normal(Tensor& t, Rng& rng, double stddev);
/// Real gaussians (imaginary parts zero).
void fill_normal_real(Tensor& t, Rng& rng, double stddev);

}  // namespace aliknet
