#pragma once

#include <Eigen/Dense>

namespace nlaccel {

using Index = Eigen::Index;
using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;
// Grayscale images are stored row-major so that a flattened image is a Vector
// over pixels in raster order.
using Image = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// Layout of a flattened signal. 1-D signals have cols == 1.
struct Shape {
  Index rows = 0;
  Index cols = 1;

  static constexpr Shape vector(Index n) { return {n, 1}; }
  static constexpr Shape image(Index rows, Index cols) { return {rows, cols}; }

  constexpr Index size() const { return rows * cols; }
  constexpr bool is_2d() const { return rows > 1 && cols > 1; }
  constexpr bool operator==(const Shape&) const = default;
};

inline Vector flatten(const Image& img) {
  return Eigen::Map<const Vector>(img.data(), img.size());
}

inline Image unflatten(const Vector& v, Shape shape) {
  return Eigen::Map<const Image>(v.data(), shape.rows, shape.cols);
}

}  // namespace nlaccel
