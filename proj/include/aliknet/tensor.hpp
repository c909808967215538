#pragma once

#include <complex>
#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "aliknet/errors.hpp"

namespace aliknet {

using cplx = std::complex<double>;

/// Dense complex-valued tensor with row-major layout and value semantics.
///
/// All network activations, parameters and k-space data use this one type.
/// Real-valued quantities (masks, attention weights, scalar parameters) are
/// stored with zero imaginary part; the gradient rules keep them real.
class Tensor {
public:
  Tensor() = default;
  explicit Tensor(std::vector<std::size_t> dims);

  static Tensor zeros(std::vector<std::size_t> dims);
  static Tensor full(std::vector<std::size_t> dims, cplx value);

  std::size_t ndim() const { return dims_.size(); }
  std::size_t size() const { return data_.size(); }
  const std::vector<std::size_t>& dims() const { return dims_; }
  std::size_t dim(std::size_t axis) const { return dims_[axis]; }
  bool empty() const { return data_.empty(); }

  cplx* data() { return data_.data(); }
  const cplx* data() const { return data_.data(); }
  cplx& operator[](std::size_t i) { return data_[i]; }
  const cplx& operator[](std::size_t i) const { return data_[i]; }

  /// Flat offset of a multi-index (row-major).
  std::size_t idx(std::size_t a, std::size_t b) const { return a * dims_[1] + b; }
  std::size_t idx(std::size_t a, std::size_t b, std::size_t c) const {
    return (a * dims_[1] + b) * dims_[2] + c;
  }
  std::size_t idx(std::size_t a, std::size_t b, std::size_t c, std::size_t d) const {
    return ((a * dims_[1] + b) * dims_[2] + c) * dims_[3] + d;
  }
  std::size_t idx(std::size_t a, std::size_t b, std::size_t c, std::size_t d,
                  std::size_t e) const {
    return (((a * dims_[1] + b) * dims_[2] + c) * dims_[3] + d) * dims_[4] + e;
  }

  /// Same data, new dims; element count must match.
  Tensor reshaped(std::vector<std::size_t> dims) const;

  void fill(cplx value);
  bool same_dims(const Tensor& other) const { return dims_ == other.dims_; }

private:
  std::vector<std::size_t> dims_;
  std::vector<cplx> data_;
};

std::string dims_to_string(const std::vector<std::size_t>& dims);

/// Throws ShapeError naming both shapes if they differ.
void require_same_dims(const char* op, const Tensor& a, const Tensor& b);
void require_ndim(const char* op, const Tensor& t, std::size_t ndim);

Tensor operator+(const Tensor& a, const Tensor& b);
Tensor operator-(const Tensor& a, const Tensor& b);
/// Elementwise (Hadamard) product.
Tensor operator*(const Tensor& a, const Tensor& b);

Tensor conj(const Tensor& t);
Tensor scale(const Tensor& t, cplx factor);
/// y += alpha * x
void axpy(cplx alpha, const Tensor& x, Tensor& y);

/// Sum of conj(a_i) * b_i, the inner product the gradient rules are stated in.
cplx dot(const Tensor& a, const Tensor& b);
double norm(const Tensor& t);
double max_abs(const Tensor& t);
bool all_finite(const Tensor& t);

// Cotangent rules for the elementwise ops, in the convention
// g = dL/dRe + i*dL/dIm.  Each returns the input cotangents.
void hadamard_backward(const Tensor& a, const Tensor& b, const Tensor& g,
                       Tensor& g_a, Tensor& g_b);
Tensor conj_backward(const Tensor& g);
void scale_backward(const Tensor& x, cplx factor, const Tensor& g, Tensor& g_x,
                    cplx& g_factor);
/// Magnitude |z| per element (result is real-valued); g is the cotangent of
/// the magnitude (imaginary part ignored).  Subgradient 0 at z = 0.
Tensor abs_forward(const Tensor& t);
Tensor abs_backward(const Tensor& x, const Tensor& g);

}  // namespace aliknet
