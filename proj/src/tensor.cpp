#include "aliknet/tensor.hpp"

#include <cmath>
#include <sstream>

namespace aliknet {

Tensor::Tensor(std::vector<std::size_t> dims) : dims_(std::move(dims)) {
  std::size_t n = 1;
  for (std::size_t d : dims_) {
    if (d == 0) {
      throw ShapeError("tensor dims " + dims_to_string(dims_) +
                       " contain a zero extent");
    }
    n *= d;
  }
  data_.assign(n, cplx(0.0, 0.0));
}

Tensor Tensor::zeros(std::vector<std::size_t> dims) { return Tensor(std::move(dims)); }

Tensor Tensor::full(std::vector<std::size_t> dims, cplx value) {
  Tensor t(std::move(dims));
  t.fill(value);
  return t;
}

Tensor Tensor::reshaped(std::vector<std::size_t> dims) const {
  std::size_t n = 1;
  for (std::size_t d : dims) n *= d;
  if (n != size()) {
    throw ShapeError("reshape from " + dims_to_string(dims_) + " to " +
                     dims_to_string(dims) + " changes element count");
  }
  Tensor t;
  t.dims_ = std::move(dims);
  t.data_ = data_;
  return t;
}

void Tensor::fill(cplx value) {
  for (cplx& v : data_) v = value;
}

std::string dims_to_string(const std::vector<std::size_t>& dims) {
  std::ostringstream os;
  os << '(';
  for (std::size_t i = 0; i < dims.size(); ++i) {
    if (i) os << ',';
    os << dims[i];
  }
  os << ')';
  return os.str();
}

void require_same_dims(const char* op, const Tensor& a, const Tensor& b) {
  if (!a.same_dims(b)) {
    throw ShapeError(std::string(op) + ": shapes " + dims_to_string(a.dims()) +
                     " and " + dims_to_string(b.dims()) + " differ");
  }
}

void require_ndim(const char* op, const Tensor& t, std::size_t ndim) {
  if (t.ndim() != ndim) {
    throw ShapeError(std::string(op) + ": expected " + std::to_string(ndim) +
                     "-d tensor, got " + dims_to_string(t.dims()));
  }
}

Tensor operator+(const Tensor& a, const Tensor& b) {
  require_same_dims("add", a, b);
  Tensor out(a.dims());
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i] + b[i];
  return out;
}

Tensor operator-(const Tensor& a, const Tensor& b) {
  require_same_dims("sub", a, b);
  Tensor out(a.dims());
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i] - b[i];
  return out;
}

Tensor operator*(const Tensor& a, const Tensor& b) {
  require_same_dims("mul", a, b);
  Tensor out(a.dims());
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double ar = a[i].real(), ai = a[i].imag();
    const double br = b[i].real(), bi = b[i].imag();
    out[i] = cplx(ar * br - ai * bi, ar * bi + ai * br);
  }
  return out;
}

Tensor conj(const Tensor& t) {
  Tensor out(t.dims());
  for (std::size_t i = 0; i < t.size(); ++i) out[i] = std::conj(t[i]);
  return out;
}

Tensor scale(const Tensor& t, cplx factor) {
  Tensor out(t.dims());
  for (std::size_t i = 0; i < t.size(); ++i) out[i] = factor * t[i];
  return out;
}

void axpy(cplx alpha, const Tensor& x, Tensor& y) {
  require_same_dims("axpy", x, y);
  for (std::size_t i = 0; i < x.size(); ++i) y[i] += alpha * x[i];
}

cplx dot(const Tensor& a, const Tensor& b) {
  require_same_dims("dot", a, b);
  cplx acc(0.0, 0.0);
  for (std::size_t i = 0; i < a.size(); ++i) acc += std::conj(a[i]) * b[i];
  return acc;
}

double norm(const Tensor& t) {
  double acc = 0.0;
  for (std::size_t i = 0; i < t.size(); ++i) acc += std::norm(t[i]);
  return std::sqrt(acc);
}

double max_abs(const Tensor& t) {
  double m = 0.0;
  for (std::size_t i = 0; i < t.size(); ++i) m = std::max(m, std::abs(t[i]));
  return m;
}

bool all_finite(const Tensor& t) {
  for (std::size_t i = 0; i < t.size(); ++i) {
    if (!std::isfinite(t[i].real()) || !std::isfinite(t[i].imag())) return false;
  }
  return true;
}

void hadamard_backward(const Tensor& a, const Tensor& b, const Tensor& g,
                       Tensor& g_a, Tensor& g_b) {
  require_same_dims("hadamard_backward", a, g);
  g_a = conj(b) * g;
  g_b = conj(a) * g;
}

Tensor conj_backward(const Tensor& g) { return conj(g); }

void scale_backward(const Tensor& x, cplx factor, const Tensor& g, Tensor& g_x,
                    cplx& g_factor) {
  g_x = scale(g, std::conj(factor));
  g_factor = dot(x, g);
}

Tensor abs_forward(const Tensor& t) {
  Tensor out(t.dims());
  for (std::size_t i = 0; i < t.size(); ++i) out[i] = cplx(std::abs(t[i]), 0.0);
  return out;
}

Tensor abs_backward(const Tensor& x, const Tensor& g) {
  require_same_dims("abs_backward", x, g);
  Tensor out(x.dims());
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double m = std::abs(x[i]);
    out[i] = (m > 0.0) ? (g[i].real() / m) * x[i] : cplx(0.0, 0.0);
  }
  return out;
}

}  // namespace aliknet
