#pragma once

// Linear distortion operators G used by the reconstruction hosts, plus the
// transforms and projections they need. Operators are immutable after
// construction and safe to share between threads.

#include <concepts>
#include <memory>
#include <type_traits>
#include <utility>
#include <vector>

#include "nlaccel/types.hpp"

namespace nlaccel {

template <class T>
concept DistortionOperator = requires(const T& op, const Vector& x) {
  { op.apply(x) } -> std::convertible_to<Vector>;
  { op.shape() } -> std::convertible_to<Shape>;
};

/// Type-erased linear operator on signals of a fixed shape.
class LinearDistortion {
 public:
  template <DistortionOperator Op>
    requires(!std::same_as<std::remove_cvref_t<Op>, LinearDistortion>)
  LinearDistortion(Op op)  // NOLINT: implicit by design
      : impl_(std::make_shared<Model<Op>>(std::move(op))) {}

  Vector apply(const Vector& x) const { return impl_->apply(x); }
  Vector operator()(const Vector& x) const { return impl_->apply(x); }
  Shape shape() const { return impl_->shape(); }

 private:
  struct Concept {
    virtual ~Concept() = default;
    virtual Vector apply(const Vector& x) const = 0;
    virtual Shape shape() const = 0;
  };
  template <class Op>
  struct Model final : Concept {
    explicit Model(Op o) : op(std::move(o)) {}
    Vector apply(const Vector& x) const override { return op.apply(x); }
    Shape shape() const override { return op.shape(); }
    Op op;
  };
  std::shared_ptr<const Concept> impl_;
};

using MaskVector = Eigen::Array<bool, Eigen::Dynamic, 1>;

class MaskOperator {
 public:
  /// keep[i] == true retains sample i; keep is in raster order for images.
  MaskOperator(MaskVector keep, Shape shape);
  explicit MaskOperator(MaskVector keep);

  Vector apply(const Vector& x) const;
  Shape shape() const { return shape_; }
  const MaskVector& keep() const { return keep_; }
  Index kept_count() const { return keep_.count(); }

 private:
  MaskVector keep_;
  Shape shape_;
};

/// Retains DFT bins 0..B and L-B..L-1 on every axis (separable in 2-D).
class LowPassDFTFilter {
 public:
  LowPassDFTFilter(Shape shape, Index band);
  LowPassDFTFilter(Index length, Index band) : LowPassDFTFilter(Shape::vector(length), band) {}

  Vector apply(const Vector& x) const;
  Shape shape() const { return shape_; }
  Index band() const { return band_; }

 private:
  Shape shape_;
  Index band_;
};

/// Separable Gaussian blur with periodic boundaries. Kernel truncated at
/// radius ceil(3 sigma) unless given, then renormalized to unit sum.
class GaussianSmoother {
 public:
  GaussianSmoother(Shape shape, double sigma, int radius = 0);

  Vector apply(const Vector& x) const;
  Shape shape() const { return shape_; }
  double sigma() const { return sigma_; }
  int radius() const { return radius_; }
  const std::vector<double>& kernel() const { return kernel_; }

 private:
  Shape shape_;
  double sigma_;
  int radius_;
  std::vector<double> kernel_;  // 2*radius+1 taps
};

class ScaleOperator {
 public:
  ScaleOperator(Shape shape, double factor) : shape_(shape), factor_(factor) {}
  Vector apply(const Vector& x) const;
  Shape shape() const { return shape_; }

 private:
  Shape shape_;
  double factor_;
};

class IdentityOperator {
 public:
  explicit IdentityOperator(Shape shape) : shape_(shape) {}
  Vector apply(const Vector& x) const;
  Shape shape() const { return shape_; }

 private:
  Shape shape_;
};

/// x -> outer(inner(x)). Throws std::invalid_argument on shape mismatch.
LinearDistortion compose(LinearDistortion outer, LinearDistortion inner);

Vector apply_mask(const Vector& x, const MaskOperator& m);
Vector lp_filter(const Vector& x, const LowPassDFTFilter& f);

Vector dct_forward(const Vector& x, Shape shape);
Vector dct_inverse(const Vector& coeffs, Shape shape);
inline Vector dct_forward(const Vector& x) { return dct_forward(x, Shape::vector(x.size())); }
inline Vector dct_inverse(const Vector& c) { return dct_inverse(c, Shape::vector(c.size())); }

enum class Transform { dft, dct };

/// Largest coefficient magnitude of x in the (unitary) transform domain.
double max_transform_magnitude(const Vector& x, Shape shape, Transform t);

/// Zeroes transform coefficients with magnitude below `threshold` and
/// transforms back. DFT magnitudes use unitary normalization.
Vector hard_threshold(const Vector& x, Shape shape, Transform t, double threshold);

class PseudoInverseProjector {
 public:
  explicit PseudoInverseProjector(Matrix A);

  const Matrix& matrix() const { return A_; }
  const Matrix& pinv() const { return pinv_; }
  Index rank() const { return rank_; }
  bool full_row_rank() const { return rank_ == A_.rows(); }

  /// s - A+ (A s - b)
  Vector project(const Vector& s, const Vector& b) const;
  /// A+ b, the minimum-norm solution of A s = b.
  Vector min_norm_solution(const Vector& b) const;

 private:
  Matrix A_;
  Matrix pinv_;
  Index rank_ = 0;
};

Vector pinv_project(const Vector& s, const PseudoInverseProjector& P, const Vector& b);

}  // namespace nlaccel
