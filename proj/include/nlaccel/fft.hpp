#pragma once

// Thin wrappers over FFTW. Spectra of real signals are stored as the
// non-redundant half: n/2+1 bins for 1-D, rows x (cols/2+1) row-major for 2-D.

#include <complex>
#include <vector>

#include "nlaccel/types.hpp"

namespace nlaccel::fft {

using Spectrum = std::vector<std::complex<double>>;

/// Unnormalized forward DFT of a real signal.
Spectrum forward_real(const Vector& x, Shape shape);
/// Inverse of forward_real (includes the 1/N factor).
Vector inverse_real(const Spectrum& spectrum, Shape shape);

/// Number of columns of the half spectrum for `shape`.
Index half_cols(Shape shape);

/// Unitary complex DFT (1/sqrt(N) both ways).
Eigen::VectorXcd forward_complex(const Eigen::VectorXcd& x);
Eigen::VectorXcd inverse_complex(const Eigen::VectorXcd& X);

/// Orthonormal DCT-II (separable for 2-D shapes) and its inverse (DCT-III).
Vector dct_forward(const Vector& x, Shape shape);
Vector dct_inverse(const Vector& coeffs, Shape shape);

}  // namespace nlaccel::fft
