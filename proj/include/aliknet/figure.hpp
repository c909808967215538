#pragma once

#include <string>
#include <vector>

#include "aliknet/tensor.hpp"

namespace aliknet {

// Binary 8-bit portable graymaps (P5, maxval 255). Values are clipped to
// [0, 1] and quantized with round-half-up.

void write_pgm(const std::string& path, const std::vector<double>& values,
               std::size_t rows, std::size_t cols);

// One frame of a (T, X, Y) stack as its magnitude image.
void write_magnitude_pgm(const std::string& path, const Tensor& x,
                         std::size_t frame);

// The same frame's absolute error against a reference, scaled by 5 before
// clipping.
void write_error_pgm(const std::string& path, const Tensor& pred,
                     const Tensor& ref, std::size_t frame);

}  // namespace aliknet
