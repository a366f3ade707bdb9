#include "nlaccel/accel.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace nlaccel {

namespace {

void require_same_length(const Vector& a, const Vector& b, const char* what) {
  if (a.size() != b.size()) {
    throw std::invalid_argument(std::string(what) + ": length mismatch (" +
                                std::to_string(a.size()) + " vs " + std::to_string(b.size()) +
                                ")");
  }
}

double nl_value(double x1, double x2, double x3, double den) {
  return (x3 * x1 - x2 * x2) / den;
}

double lower_median(std::vector<double>& values) {
  auto mid = values.begin() + static_cast<std::ptrdiff_t>((values.size() - 1) / 2);
  std::nth_element(values.begin(), mid, values.end());
  return *mid;
}

}  // namespace

void IterateWindow::validate() const {
  if (x3.size() == 0) throw std::invalid_argument("IterateWindow: empty iterates");
  require_same_length(x0, x3, "IterateWindow");
  require_same_length(x1, x3, "IterateWindow");
  require_same_length(x2, x3, "IterateWindow");
}

StabilizerPolicy& StabilizerPolicy::clip(double lo, double hi) {
  if (!(lo < hi)) throw std::invalid_argument("clip stage requires lo < hi");
  stages_.push_back(ClipStage{lo, hi});
  return *this;
}

StabilizerPolicy& StabilizerPolicy::substitute(double lo, double hi) {
  if (!(lo < hi)) throw std::invalid_argument("substitute stage requires lo < hi");
  stages_.push_back(SubstituteStage{lo, hi});
  return *this;
}

StabilizerPolicy& StabilizerPolicy::median(int window_len) {
  if (window_len < 3 || window_len % 2 == 0) {
    throw std::invalid_argument("median stage requires an odd window length >= 3");
  }
  stages_.push_back(MedianStage{window_len});
  return *this;
}

double default_denominator_epsilon(const Vector& x3) {
  if (x3.size() == 0) return 0.0;
  double lo = std::numeric_limits<double>::infinity();
  double hi = -lo;
  for (double v : x3) {
    if (!std::isfinite(v)) continue;
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  return hi >= lo ? 1e-12 * (hi - lo) : 0.0;
}

Vector nl_combine(const Vector& x1, const Vector& x2, const Vector& x3, double eps) {
  require_same_length(x1, x3, "nl_combine");
  require_same_length(x2, x3, "nl_combine");
  if (eps < 0) throw std::invalid_argument("nl_combine: eps must be nonnegative");
  Vector out(x3.size());
  for (Index i = 0; i < x3.size(); ++i) {
    const double den = x3[i] + x1[i] - 2.0 * x2[i];
    out[i] = std::abs(den) <= eps ? x3[i] : nl_value(x1[i], x2[i], x3[i], den);
  }
  return out;
}

Vector mnl_combine(const IterateWindow& w, double eps, bool per_element_selection) {
  w.validate();
  if (eps < 0) throw std::invalid_argument("mnl_combine: eps must be nonnegative");
  const Index n = w.size();
  const Vector sigma0 = w.x2 + w.x0 - 2.0 * w.x1;
  const Vector sigma1 = w.x3 + w.x1 - 2.0 * w.x2;
  const bool newer_everywhere =
      !per_element_selection && sigma0.cwiseAbs().maxCoeff() <= sigma1.cwiseAbs().maxCoeff();

  Vector out(n);
  for (Index i = 0; i < n; ++i) {
    const double s0 = std::abs(sigma0[i]);
    const double s1 = std::abs(sigma1[i]);
    if (s0 <= eps && s1 <= eps) {
      out[i] = w.x3[i];
      continue;
    }
    bool newer = per_element_selection ? s0 <= s1 : newer_everywhere;
    // Whole-vector selection can land on a vanishing denominator; use the other window.
    if (newer && s1 <= eps) newer = false;
    if (!newer && s0 <= eps) newer = true;
    out[i] = newer ? nl_value(w.x1[i], w.x2[i], w.x3[i], sigma1[i])
                   : nl_value(w.x0[i], w.x1[i], w.x2[i], sigma0[i]);
  }
  return out;
}

Vector median_filter(const Vector& x, int window_len, std::optional<Shape> grid) {
  if (window_len < 1 || window_len % 2 == 0) {
    throw std::invalid_argument("median_filter: window length must be odd");
  }
  const Index h = window_len / 2;
  const Shape shape = grid.value_or(Shape::vector(x.size()));
  if (shape.size() != x.size()) throw std::invalid_argument("median_filter: shape mismatch");

  Vector out(x.size());
  std::vector<double> buf;
  buf.reserve(static_cast<size_t>(window_len * window_len));
  for (Index r = 0; r < shape.rows; ++r) {
    for (Index c = 0; c < shape.cols; ++c) {
      buf.clear();
      const Index r0 = std::max<Index>(0, r - h), r1 = std::min(shape.rows - 1, r + h);
      const Index c0 = std::max<Index>(0, c - h), c1 = std::min(shape.cols - 1, c + h);
      for (Index rr = r0; rr <= r1; ++rr) {
        for (Index cc = c0; cc <= c1; ++cc) {
          const double v = x[rr * shape.cols + cc];
          if (std::isfinite(v)) buf.push_back(v);
        }
      }
      const Index idx = r * shape.cols + c;
      out[idx] = buf.empty() ? x[idx] : lower_median(buf);
    }
  }
  return out;
}

Vector stabilize(Vector candidate, const IterateWindow& w, const StabilizerPolicy& policy,
                 std::optional<Shape> grid) {
  require_same_length(candidate, w.x3, "stabilize");
  for (const auto& stage : policy.stages()) {
    if (const auto* clip = std::get_if<ClipStage>(&stage)) {
      for (Index i = 0; i < candidate.size(); ++i) {
        double& v = candidate[i];
        // NaN has no nearer bound; fall back to the clamped newest iterate.
        if (std::isnan(v)) v = std::isnan(w.x3[i]) ? clip->lo : w.x3[i];
        v = std::clamp(v, clip->lo, clip->hi);
      }
    } else if (const auto* sub = std::get_if<SubstituteStage>(&stage)) {
      for (Index i = 0; i < candidate.size(); ++i) {
        double& v = candidate[i];
        if (!std::isfinite(v) || v < sub->lo || v > sub->hi) v = w.x3[i];
      }
    } else if (const auto* med = std::get_if<MedianStage>(&stage)) {
      const bool two_d = grid && grid->is_2d();
      candidate = median_filter(candidate, med->window_len, two_d ? grid : std::nullopt);
    }
  }
  return candidate;
}

Vector accelerate(const IterateWindow& w, const AccelConfig& cfg) {
  w.validate();
  const double eps = cfg.denominator_epsilon.value_or(default_denominator_epsilon(w.x3));
  return stabilize(mnl_combine(w, eps, cfg.per_element_selection), w, cfg.policy, cfg.grid);
}

}  // namespace nlaccel
