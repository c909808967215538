#pragma once

#include "aliknet/tensor.hpp"

namespace aliknet {

/// Centered unitary 2-D Fourier transform over the last two axes:
/// fftshift . fft2 . ifftshift, scaled by 1/sqrt(nx*ny).  Its inverse equals
/// its adjoint, so the backward pass of fft2c is ifft2c applied to the
/// cotangent (and vice versa).
Tensor fft2c(const Tensor& t);
Tensor ifft2c(const Tensor& t);

/// Unnormalized, uncentered transform along one axis.
/// sign -1 is the forward convention exp(-2*pi*i*j*k/n).
void fft_axis_inplace(Tensor& t, std::size_t axis, int sign);

/// Circular shift along an axis: out[(i + amount) mod n] = in[i].
Tensor roll_axis(const Tensor& t, std::size_t axis, std::size_t amount);

}  // namespace aliknet
