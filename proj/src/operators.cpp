#include "nlaccel/operators.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

#include "nlaccel/fft.hpp"

namespace nlaccel {

namespace {

void require_size(const Vector& x, Shape shape, const char* who) {
  if (x.size() != shape.size()) {
    throw std::invalid_argument(std::string(who) + ": expected length " +
                                std::to_string(shape.size()) + ", got " +
                                std::to_string(x.size()));
  }
}

bool in_band(Index k, Index len, Index band) { return k <= band || k >= len - band; }

}  // namespace

MaskOperator::MaskOperator(MaskVector keep, Shape shape) : keep_(std::move(keep)), shape_(shape) {
  if (keep_.size() != shape_.size()) {
    throw std::invalid_argument("MaskOperator: mask size does not match shape");
  }
}

MaskOperator::MaskOperator(MaskVector keep)
    : MaskOperator(keep, Shape::vector(keep.size())) {}

Vector MaskOperator::apply(const Vector& x) const {
  require_size(x, shape_, "apply_mask");
  return keep_.select(x.array(), 0.0).matrix();
}

LowPassDFTFilter::LowPassDFTFilter(Shape shape, Index band) : shape_(shape), band_(band) {
  if (shape.size() <= 0) throw std::invalid_argument("LowPassDFTFilter: empty shape");
  const Index limit = shape.cols > 1 ? std::min(shape.rows, shape.cols) / 2 : shape.rows / 2;
  if (band < 0 || band > limit) {
    throw std::invalid_argument("LowPassDFTFilter: band must lie in [0, floor(L/2)]");
  }
}

Vector LowPassDFTFilter::apply(const Vector& x) const {
  require_size(x, shape_, "lp_filter");
  fft::Spectrum spec = fft::forward_real(x, shape_);
  if (shape_.cols > 1) {
    const Index hc = fft::half_cols(shape_);
    for (Index r = 0; r < shape_.rows; ++r) {
      const bool row_ok = in_band(r, shape_.rows, band_);
      for (Index c = 0; c < hc; ++c) {
        if (!row_ok || !in_band(c, shape_.cols, band_)) spec[static_cast<size_t>(r * hc + c)] = 0.0;
      }
    }
  } else {
    for (Index k = 0; k < static_cast<Index>(spec.size()); ++k) {
      if (!in_band(k, shape_.rows, band_)) spec[static_cast<size_t>(k)] = 0.0;
    }
  }
  return fft::inverse_real(spec, shape_);
}

GaussianSmoother::GaussianSmoother(Shape shape, double sigma, int radius)
    : shape_(shape), sigma_(sigma), radius_(radius) {
  if (!(sigma > 0.0) || !std::isfinite(sigma)) {
    throw std::invalid_argument("GaussianSmoother: sigma must be positive");
  }
  if (radius_ < 0) throw std::invalid_argument("GaussianSmoother: radius must be positive");
  if (radius_ == 0) radius_ = static_cast<int>(std::ceil(3.0 * sigma));
  kernel_.resize(static_cast<size_t>(2 * radius_ + 1));
  double sum = 0.0;
  for (int k = -radius_; k <= radius_; ++k) {
    const double v = std::exp(-0.5 * k * k / (sigma * sigma));
    kernel_[static_cast<size_t>(k + radius_)] = v;
    sum += v;
  }
  for (double& v : kernel_) v /= sum;
}

Vector GaussianSmoother::apply(const Vector& x) const {
  require_size(x, shape_, "GaussianSmoother");
  auto wrap = [](Index i, Index n) { return ((i % n) + n) % n; };
  const Index rows = shape_.rows;
  const Index cols = shape_.cols;
  // Rows axis first (the only axis for 1-D signals), then columns.
  Vector tmp = Vector::Zero(x.size());
  for (Index r = 0; r < rows; ++r) {
    for (int k = -radius_; k <= radius_; ++k) {
      const double w = kernel_[static_cast<size_t>(k + radius_)];
      const Index src = wrap(r + k, rows);
      tmp.segment(r * cols, cols) += w * x.segment(src * cols, cols);
    }
  }
  if (cols == 1) return tmp;
  Vector out = Vector::Zero(x.size());
  for (Index r = 0; r < rows; ++r) {
    for (Index c = 0; c < cols; ++c) {
      double acc = 0.0;
      for (int k = -radius_; k <= radius_; ++k) {
        acc += kernel_[static_cast<size_t>(k + radius_)] * tmp[r * cols + wrap(c + k, cols)];
      }
      out[r * cols + c] = acc;
    }
  }
  return out;
}

Vector ScaleOperator::apply(const Vector& x) const {
  require_size(x, shape_, "ScaleOperator");
  return factor_ * x;
}

Vector IdentityOperator::apply(const Vector& x) const {
  require_size(x, shape_, "IdentityOperator");
  return x;
}

namespace {

struct Composed {
  LinearDistortion outer;
  LinearDistortion inner;
  Vector apply(const Vector& x) const { return outer.apply(inner.apply(x)); }
  Shape shape() const { return inner.shape(); }
};

}  // namespace

LinearDistortion compose(LinearDistortion outer, LinearDistortion inner) {
  if (!(outer.shape() == inner.shape())) {
    throw std::invalid_argument("compose: operator shapes differ");
  }
  return Composed{std::move(outer), std::move(inner)};
}

Vector apply_mask(const Vector& x, const MaskOperator& m) { return m.apply(x); }

Vector lp_filter(const Vector& x, const LowPassDFTFilter& f) { return f.apply(x); }

Vector dct_forward(const Vector& x, Shape shape) { return fft::dct_forward(x, shape); }

Vector dct_inverse(const Vector& coeffs, Shape shape) { return fft::dct_inverse(coeffs, shape); }

double max_transform_magnitude(const Vector& x, Shape shape, Transform t) {
  require_size(x, shape, "max_transform_magnitude");
  if (t == Transform::dct) return fft::dct_forward(x, shape).cwiseAbs().maxCoeff();
  const fft::Spectrum spec = fft::forward_real(x, shape);
  double m = 0.0;
  for (const auto& c : spec) m = std::max(m, std::abs(c));
  return m / std::sqrt(static_cast<double>(shape.size()));
}

Vector hard_threshold(const Vector& x, Shape shape, Transform t, double threshold) {
  require_size(x, shape, "hard_threshold");
  if (t == Transform::dct) {
    Vector c = fft::dct_forward(x, shape);
    for (double& v : c) {
      if (std::abs(v) < threshold) v = 0.0;
    }
    return fft::dct_inverse(c, shape);
  }
  fft::Spectrum spec = fft::forward_real(x, shape);
  const double scale = std::sqrt(static_cast<double>(shape.size()));
  // Conjugate-symmetric partners share a magnitude, so the result stays real.
  for (auto& c : spec) {
    if (std::abs(c) / scale < threshold) c = 0.0;
  }
  return fft::inverse_real(spec, shape);
}

PseudoInverseProjector::PseudoInverseProjector(Matrix A) : A_(std::move(A)) {
  if (A_.size() == 0) throw std::invalid_argument("PseudoInverseProjector: empty matrix");
  Eigen::CompleteOrthogonalDecomposition<Matrix> cod(A_.rows(), A_.cols());
  cod.setThreshold(std::numeric_limits<double>::epsilon() *
                   static_cast<double>(std::max(A_.rows(), A_.cols())));
  cod.compute(A_);
  rank_ = cod.rank();
  pinv_ = cod.pseudoInverse();
}

Vector PseudoInverseProjector::project(const Vector& s, const Vector& b) const {
  if (s.size() != A_.cols() || b.size() != A_.rows()) {
    throw std::invalid_argument("pinv_project: dimension mismatch");
  }
  return s - pinv_ * (A_ * s - b);
}

Vector PseudoInverseProjector::min_norm_solution(const Vector& b) const {
  if (b.size() != A_.rows()) throw std::invalid_argument("pinv: dimension mismatch");
  return pinv_ * b;
}

Vector pinv_project(const Vector& s, const PseudoInverseProjector& P, const Vector& b) {
  return P.project(s, b);
}

}  // namespace nlaccel
