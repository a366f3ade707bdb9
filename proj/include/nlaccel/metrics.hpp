#pragma once

// Full-reference quality metrics and the per-iteration report written as CSV.

#include <limits>
#include <ostream>
#include <string>
#include <vector>

#include "nlaccel/types.hpp"

namespace nlaccel {

/// Value reported for an exact reconstruction.
inline constexpr double kQualityCapDb = 300.0;

/// 10 log10(||x||^2 / ||x - x_est||^2), clamped to [-300, 300]; -300 when
/// x_est is not finite. Throws on length mismatch or a zero reference.
double snr_db(const Vector& x_true, const Vector& x_est);

/// 10 log10(maxval^2 / MSE), capped at +300 dB.
double psnr_db(const Image& img_true, const Image& img_est, double maxval = 255.0);
double psnr_db(const Vector& x_true, const Vector& x_est, double maxval = 255.0);

struct SsimOptions {
  double k1 = 0.01;
  double k2 = 0.03;
  double dynamic_range = 255.0;
  int window = 11;
  double window_sigma = 1.5;
};

/// Mean local SSIM over the fully overlapped ("valid") window positions.
/// Throws std::invalid_argument for images smaller than the window.
double ssim(const Image& a, const Image& b, const SsimOptions& opts = {});

struct MsSsimOptions {
  std::vector<double> weights{0.0448, 0.2856, 0.3001, 0.2363, 0.1333};
  SsimOptions ssim;
};

/// Product over scales of mean contrast-structure terms (mean SSIM at the
/// coarsest scale) raised to the scale weights; 2x2 mean pooling between
/// scales. Requires min(rows, cols) >= window * 2^(scales-1).
double ms_ssim(const Image& a, const Image& b, const MsSsimOptions& opts = {});

struct MethodQuality {
  double snr_db = 0.0;
  // Image metrics; NaN when not computed.
  double psnr_db = std::numeric_limits<double>::quiet_NaN();
  double ssim = std::numeric_limits<double>::quiet_NaN();
  double ms_ssim = std::numeric_limits<double>::quiet_NaN();
};

struct QualityRow {
  int iteration = 0;
  MethodQuality plain;
  MethodQuality mnl;
};

struct QualityReport {
  bool image_metrics = false;
  std::vector<QualityRow> rows;

  /// Throws std::logic_error unless iterations strictly increase and SSIM values lie in [-1, 1].
  void validate() const;
  void write_csv(std::ostream& os) const;
  std::string to_csv() const;
};

/// Fixed CSV number formatting (%.10g); NaN becomes an empty field.
std::string csv_number(double v);

}  // namespace nlaccel
