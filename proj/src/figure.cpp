#include "aliknet/figure.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include "aliknet/errors.hpp"

namespace aliknet {

namespace {

unsigned char quantize(double v) {
  const double clipped = std::clamp(v, 0.0, 1.0);
  const double scaled = std::floor(clipped * 255.0 + 0.5);  // round half up
  return static_cast<unsigned char>(std::min(scaled, 255.0));
}

void check_frame(const Tensor& x, std::size_t frame) {
  require_ndim("figure input", x, 3);
  if (frame >= x.dim(0)) {
    throw ShapeError("frame " + std::to_string(frame) + " out of range for " +
                     dims_to_string(x.dims()));
  }
}

}  // namespace

void write_pgm(const std::string& path, const std::vector<double>& values,
               std::size_t rows, std::size_t cols) {
  if (values.size() != rows * cols) {
    throw ShapeError("pgm payload has " + std::to_string(values.size()) +
                     " values for a " + std::to_string(rows) + "x" +
                     std::to_string(cols) + " image");
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open " + path + " for writing");
  out << "P5\n" << cols << " " << rows << "\n255\n";
  for (double v : values) out.put(static_cast<char>(quantize(v)));
  if (!out) throw IoError("short write to " + path);
}

void write_magnitude_pgm(const std::string& path, const Tensor& x,
                         std::size_t frame) {
  check_frame(x, frame);
  const std::size_t X = x.dim(1), Y = x.dim(2);
  std::vector<double> img(X * Y);
  for (std::size_t i = 0; i < img.size(); ++i) {
    img[i] = std::abs(x[frame * X * Y + i]);
  }
  write_pgm(path, img, X, Y);
}

void write_error_pgm(const std::string& path, const Tensor& pred,
                     const Tensor& ref, std::size_t frame) {
  require_same_dims("error map", pred, ref);
  check_frame(pred, frame);
  const std::size_t X = pred.dim(1), Y = pred.dim(2);
  std::vector<double> img(X * Y);
  for (std::size_t i = 0; i < img.size(); ++i) {
    const std::size_t k = frame * X * Y + i;
    img[i] = 5.0 * std::abs(pred[k] - ref[k]);
  }
  write_pgm(path, img, X, Y);
}

}  // namespace aliknet
