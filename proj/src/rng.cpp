#include "aliknet/rng.hpp"

#include <cmath>
#include <numbers>

namespace aliknet {

namespace {

std::uint64_t mix64(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

}  // namespace

Rng::Rng(std::uint64_t seed) : key_(mix64(seed + 0x9e3779b97f4a7c15ULL)) {}

std::uint64_t Rng::next_u64() {
  std::uint64_t z = key_ + 0x9e3779b97f4a7c15ULL * ++counter_;
  return mix64(z);
}

double Rng::uniform() {
  return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

double Rng::normal() {
  if (have_spare_) {
    have_spare_ = false;
    return spare_;
  }
  double u1 = uniform();
  while (u1 <= 0.0) u1 = uniform();
  const double u2 = uniform();
  const double r = std::sqrt(-2.0 * std::log(u1));
  const double theta = 2.0 * std::numbers::pi * u2;
  spare_ = r * std::sin(theta);
  have_spare_ = true;
  return r * std::cos(theta);
}

cplx Rng::normal_cplx() {
  const double re = normal();
  const double im = normal();
  return {re, im};
}

std::uint64_t Rng::next_below(std::uint64_t n) {
  if (n == 0) return 0;
  // rejection sampling to avoid modulo bias
  const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
  std::uint64_t v = next_u64();
  while (v >= limit) v = next_u64();
  return v % n;
}

Rng Rng::fork(std::uint64_t stream) const {
  Rng r(0);
  r.key_ = mix64(key_ ^ mix64(stream + 0x165667b19e3779f9ULL));
  return r;
}

void fill_normal(Tensor& t, Rng& rng, double stddev) {
  for (std::size_t i = 0; i < t.size(); ++i) t[i] = stddev * rng.normal_cplx();
}

void fill_normal_real(Tensor& t, Rng& rng, double stddev) {
  for (std::size_t i = 0; i < t.size(); ++i) t[i] = cplx(stddev * rng.normal(), 0.0);
}

}  // namespace aliknet
