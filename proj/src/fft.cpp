#include "nlaccel/fft.hpp"

#include <fftw3.h>

#include <cmath>
#include <cstring>
#include <mutex>
#include <stdexcept>

namespace nlaccel::fft {

namespace {

// Planning in FFTW is not thread-safe; execution of distinct plans is.
std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}

struct PlanGuard {
  fftw_plan plan = nullptr;
  explicit PlanGuard(fftw_plan p) : plan(p) {
    if (!plan) throw std::runtime_error("fftw: plan creation failed");
  }
  PlanGuard(const PlanGuard&) = delete;
  PlanGuard& operator=(const PlanGuard&) = delete;
  ~PlanGuard() {
    std::lock_guard lock(planner_mutex());
    fftw_destroy_plan(plan);
  }
  void execute() const { fftw_execute(plan); }
};

void check_shape(const Vector& x, Shape shape) {
  if (shape.size() != x.size() || x.size() == 0) {
    throw std::invalid_argument("fft: signal size does not match shape");
  }
}

double dct_scale(Index k, Index n) {
  return k == 0 ? std::sqrt(1.0 / (4.0 * static_cast<double>(n)))
                : std::sqrt(1.0 / (2.0 * static_cast<double>(n)));
}

double idct_scale(Index k, Index n) {
  return k == 0 ? std::sqrt(1.0 / static_cast<double>(n))
                : std::sqrt(1.0 / (2.0 * static_cast<double>(n)));
}

}  // namespace

Index half_cols(Shape shape) {
  return shape.cols > 1 ? shape.cols / 2 + 1 : 1;
}

Spectrum forward_real(const Vector& x, Shape shape) {
  check_shape(x, shape);
  const bool two_d = shape.cols > 1;
  const Index n_out = two_d ? shape.rows * half_cols(shape) : shape.rows / 2 + 1;
  Vector in = x;
  Spectrum out(static_cast<size_t>(n_out));
  auto* out_ptr = reinterpret_cast<fftw_complex*>(out.data());
  fftw_plan p;
  {
    std::lock_guard lock(planner_mutex());
    p = two_d ? fftw_plan_dft_r2c_2d(static_cast<int>(shape.rows), static_cast<int>(shape.cols),
                                     in.data(), out_ptr, FFTW_ESTIMATE)
              : fftw_plan_dft_r2c_1d(static_cast<int>(shape.rows), in.data(), out_ptr,
                                     FFTW_ESTIMATE);
  }
  PlanGuard plan(p);
  plan.execute();
  return out;
}

Vector inverse_real(const Spectrum& spectrum, Shape shape) {
  const bool two_d = shape.cols > 1;
  const Index n_in = two_d ? shape.rows * half_cols(shape) : shape.rows / 2 + 1;
  if (static_cast<Index>(spectrum.size()) != n_in) {
    throw std::invalid_argument("fft: spectrum size does not match shape");
  }
  Spectrum in = spectrum;  // c2r destroys its input
  Vector out(shape.size());
  auto* in_ptr = reinterpret_cast<fftw_complex*>(in.data());
  fftw_plan p;
  {
    std::lock_guard lock(planner_mutex());
    p = two_d ? fftw_plan_dft_c2r_2d(static_cast<int>(shape.rows), static_cast<int>(shape.cols),
                                     in_ptr, out.data(), FFTW_ESTIMATE)
              : fftw_plan_dft_c2r_1d(static_cast<int>(shape.rows), in_ptr, out.data(),
                                     FFTW_ESTIMATE);
  }
  PlanGuard plan(p);
  plan.execute();
  out /= static_cast<double>(shape.size());
  return out;
}

namespace {

Eigen::VectorXcd complex_transform(const Eigen::VectorXcd& x, int sign) {
  if (x.size() == 0) throw std::invalid_argument("fft: empty signal");
  Eigen::VectorXcd in = x;
  Eigen::VectorXcd out(x.size());
  fftw_plan p;
  {
    std::lock_guard lock(planner_mutex());
    p = fftw_plan_dft_1d(static_cast<int>(x.size()), reinterpret_cast<fftw_complex*>(in.data()),
                         reinterpret_cast<fftw_complex*>(out.data()), sign, FFTW_ESTIMATE);
  }
  PlanGuard plan(p);
  plan.execute();
  out /= std::sqrt(static_cast<double>(x.size()));
  return out;
}

Vector r2r(const Vector& x, Shape shape, fftw_r2r_kind kind) {
  Vector in = x;
  Vector out(x.size());
  fftw_plan p;
  {
    std::lock_guard lock(planner_mutex());
    p = shape.cols > 1
            ? fftw_plan_r2r_2d(static_cast<int>(shape.rows), static_cast<int>(shape.cols),
                               in.data(), out.data(), kind, kind, FFTW_ESTIMATE)
            : fftw_plan_r2r_1d(static_cast<int>(shape.rows), in.data(), out.data(), kind,
                               FFTW_ESTIMATE);
  }
  PlanGuard plan(p);
  plan.execute();
  return out;
}

}  // namespace

Eigen::VectorXcd forward_complex(const Eigen::VectorXcd& x) {
  return complex_transform(x, FFTW_FORWARD);
}

Eigen::VectorXcd inverse_complex(const Eigen::VectorXcd& X) {
  return complex_transform(X, FFTW_BACKWARD);
}

Vector dct_forward(const Vector& x, Shape shape) {
  check_shape(x, shape);
  Vector y = r2r(x, shape, FFTW_REDFT10);
  for (Index r = 0; r < shape.rows; ++r) {
    for (Index c = 0; c < shape.cols; ++c) {
      double s = dct_scale(r, shape.rows);
      if (shape.cols > 1) s *= dct_scale(c, shape.cols);
      y[r * shape.cols + c] *= s;
    }
  }
  return y;
}

Vector dct_inverse(const Vector& coeffs, Shape shape) {
  check_shape(coeffs, shape);
  // REDFT01 computes X0 + 2*sum Xk cos(...); pre-scale to make it orthonormal.
  Vector scaled = coeffs;
  for (Index r = 0; r < shape.rows; ++r) {
    for (Index c = 0; c < shape.cols; ++c) {
      double s = idct_scale(r, shape.rows);
      if (shape.cols > 1) s *= idct_scale(c, shape.cols);
      scaled[r * shape.cols + c] *= s;
    }
  }
  return r2r(scaled, shape, FFTW_REDFT01);
}

}  // namespace nlaccel::fft
