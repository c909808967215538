#pragma once

#include <vector>

#include "aliknet/tensor.hpp"

namespace aliknet {

/// Economy-size decomposition A = U * diag(s) * V^H with r = min(m, n).
/// u is m x r and v is n x r, both column-major; s is descending.
/// A column with zero norm yields s = 0 and a zero column in u.
struct SvdResult {
  std::size_t m = 0, n = 0, r = 0;
  std::vector<cplx> u;
  std::vector<cplx> v;
  std::vector<double> s;
};

/// One-sided Jacobi SVD of a column-major m x n complex matrix.
/// Deterministic cyclic sweep order; throws NumericError on non-convergence.
SvdResult svd_jacobi(const std::vector<cplx>& a, std::size_t m, std::size_t n);

}  // namespace aliknet
