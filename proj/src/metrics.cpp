#include "nlaccel/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>
#include <stdexcept>

namespace nlaccel {

namespace {

double clamp_db(double v) {
  if (std::isnan(v)) return -kQualityCapDb;
  return std::clamp(v, -kQualityCapDb, kQualityCapDb);
}

std::vector<double> gaussian_taps(int n, double sigma) {
  std::vector<double> taps(static_cast<size_t>(n));
  const double c = (n - 1) / 2.0;
  double sum = 0.0;
  for (int i = 0; i < n; ++i) {
    taps[static_cast<size_t>(i)] = std::exp(-0.5 * (i - c) * (i - c) / (sigma * sigma));
    sum += taps[static_cast<size_t>(i)];
  }
  for (double& t : taps) t /= sum;
  return taps;
}

// Separable "valid" correlation.
Image filter_valid(const Image& x, const std::vector<double>& taps) {
  const Index n = static_cast<Index>(taps.size());
  const Index rows = x.rows() - n + 1;
  const Index cols = x.cols() - n + 1;
  Image tmp(x.rows(), cols);
  for (Index r = 0; r < x.rows(); ++r) {
    for (Index c = 0; c < cols; ++c) {
      double acc = 0.0;
      for (Index k = 0; k < n; ++k) acc += taps[static_cast<size_t>(k)] * x(r, c + k);
      tmp(r, c) = acc;
    }
  }
  Image out(rows, cols);
  for (Index r = 0; r < rows; ++r) {
    for (Index c = 0; c < cols; ++c) {
      double acc = 0.0;
      for (Index k = 0; k < n; ++k) acc += taps[static_cast<size_t>(k)] * tmp(r + k, c);
      out(r, c) = acc;
    }
  }
  return out;
}

struct SsimMeans {
  double ssim;
  double cs;
};

SsimMeans ssim_means(const Image& a, const Image& b, const SsimOptions& o) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw std::invalid_argument("ssim: image shapes differ");
  }
  if (a.rows() < o.window || a.cols() < o.window) {
    throw std::invalid_argument("ssim: image smaller than the " + std::to_string(o.window) +
                                "x" + std::to_string(o.window) + " window");
  }
  const auto taps = gaussian_taps(o.window, o.window_sigma);
  const double c1 = (o.k1 * o.dynamic_range) * (o.k1 * o.dynamic_range);
  const double c2 = (o.k2 * o.dynamic_range) * (o.k2 * o.dynamic_range);
  const Image mu_a = filter_valid(a, taps);
  const Image mu_b = filter_valid(b, taps);
  const Image aa = filter_valid(a.cwiseProduct(a), taps);
  const Image bb = filter_valid(b.cwiseProduct(b), taps);
  const Image ab = filter_valid(a.cwiseProduct(b), taps);
  double sum_ssim = 0.0;
  double sum_cs = 0.0;
  for (Index i = 0; i < mu_a.size(); ++i) {
    const double ma = mu_a.data()[i];
    const double mb = mu_b.data()[i];
    const double va = aa.data()[i] - ma * ma;
    const double vb = bb.data()[i] - mb * mb;
    const double cov = ab.data()[i] - ma * mb;
    const double cs = (2.0 * cov + c2) / (va + vb + c2);
    const double lum = (2.0 * ma * mb + c1) / (ma * ma + mb * mb + c1);
    sum_ssim += lum * cs;
    sum_cs += cs;
  }
  const double n = static_cast<double>(mu_a.size());
  return {sum_ssim / n, sum_cs / n};
}

Image pool2(const Image& x) {
  Image out(x.rows() / 2, x.cols() / 2);
  for (Index r = 0; r < out.rows(); ++r) {
    for (Index c = 0; c < out.cols(); ++c) {
      out(r, c) = 0.25 * (x(2 * r, 2 * c) + x(2 * r + 1, 2 * c) + x(2 * r, 2 * c + 1) +
                          x(2 * r + 1, 2 * c + 1));
    }
  }
  return out;
}

}  // namespace

double snr_db(const Vector& x_true, const Vector& x_est) {
  if (x_true.size() != x_est.size()) throw std::invalid_argument("snr_db: length mismatch");
  const double sig = x_true.squaredNorm();
  if (sig == 0.0) throw std::invalid_argument("snr_db: zero reference signal");
  if (!x_est.allFinite()) return -kQualityCapDb;
  const double err = (x_true - x_est).squaredNorm();
  if (err == 0.0) return kQualityCapDb;
  return clamp_db(10.0 * std::log10(sig / err));
}

double psnr_db(const Vector& x_true, const Vector& x_est, double maxval) {
  if (x_true.size() != x_est.size() || x_true.size() == 0) {
    throw std::invalid_argument("psnr_db: shape mismatch");
  }
  if (!x_est.allFinite()) return -kQualityCapDb;
  const double mse = (x_true - x_est).squaredNorm() / static_cast<double>(x_true.size());
  if (mse == 0.0) return kQualityCapDb;
  return clamp_db(10.0 * std::log10(maxval * maxval / mse));
}

double psnr_db(const Image& img_true, const Image& img_est, double maxval) {
  if (img_true.rows() != img_est.rows() || img_true.cols() != img_est.cols()) {
    throw std::invalid_argument("psnr_db: shape mismatch");
  }
  return psnr_db(flatten(img_true), flatten(img_est), maxval);
}

double ssim(const Image& a, const Image& b, const SsimOptions& opts) {
  return ssim_means(a, b, opts).ssim;
}

double ms_ssim(const Image& a, const Image& b, const MsSsimOptions& opts) {
  const int scales = static_cast<int>(opts.weights.size());
  if (scales < 1) throw std::invalid_argument("ms_ssim: at least one scale weight required");
  const Index need = static_cast<Index>(opts.ssim.window) << (scales - 1);
  if (std::min(a.rows(), a.cols()) < need) {
    throw std::invalid_argument("ms_ssim: min dimension must be >= " + std::to_string(need));
  }
  Image x = a;
  Image y = b;
  double result = 1.0;
  for (int s = 0; s < scales; ++s) {
    const SsimMeans m = ssim_means(x, y, opts.ssim);
    const double term = s + 1 == scales ? m.ssim : m.cs;
    // Negative terms cannot take fractional powers.
    result *= std::pow(std::max(term, 0.0), opts.weights[static_cast<size_t>(s)]);
    if (s + 1 < scales) {
      x = pool2(x);
      y = pool2(y);
    }
  }
  return result;
}

std::string csv_number(double v) {
  if (std::isnan(v)) return "";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

void QualityReport::validate() const {
  for (size_t i = 0; i < rows.size(); ++i) {
    if (i > 0 && rows[i].iteration <= rows[i - 1].iteration) {
      throw std::logic_error("QualityReport: iterations must strictly increase");
    }
    for (const MethodQuality* q : {&rows[i].plain, &rows[i].mnl}) {
      for (double v : {q->ssim, q->ms_ssim}) {
        if (!std::isnan(v) && (v < -1.0 || v > 1.0)) {
          throw std::logic_error("QualityReport: SSIM outside [-1, 1]");
        }
      }
    }
  }
}

void QualityReport::write_csv(std::ostream& os) const {
  os << "iteration,snr_db_plain,snr_db_mnl";
  if (image_metrics) {
    os << ",psnr_db_plain,psnr_db_mnl,ssim_plain,ssim_mnl,ms_ssim_plain,ms_ssim_mnl";
  }
  os << "\n";
  for (const QualityRow& r : rows) {
    os << r.iteration << ',' << csv_number(r.plain.snr_db) << ',' << csv_number(r.mnl.snr_db);
    if (image_metrics) {
      os << ',' << csv_number(r.plain.psnr_db) << ',' << csv_number(r.mnl.psnr_db) << ','
         << csv_number(r.plain.ssim) << ',' << csv_number(r.mnl.ssim) << ','
         << csv_number(r.plain.ms_ssim) << ',' << csv_number(r.mnl.ms_ssim);
    }
    os << "\n";
  }
}

std::string QualityReport::to_csv() const {
  std::ostringstream os;
  write_csv(os);
  return os.str();
}

}  // namespace nlaccel
