#pragma once

// Nonlinear (Aitken-type) combination of successive iterates and the
// stabilizers that repair the spikes it produces near vanishing second
// differences. Everything here is a pure function of its arguments.

#include <limits>
#include <optional>
#include <variant>
#include <vector>

#include "nlaccel/types.hpp"

namespace nlaccel {

/// The four most recent iterates, oldest first.
struct IterateWindow {
  Vector x0, x1, x2, x3;

  Index size() const { return x3.size(); }
  /// Throws std::invalid_argument unless all four have the same nonzero length.
  void validate() const;
};

struct ClipStage {
  double lo;
  double hi;
};

/// Replaces values outside [lo, hi], or non-finite ones, by the newest iterate.
struct SubstituteStage {
  double lo = -std::numeric_limits<double>::infinity();
  double hi = std::numeric_limits<double>::infinity();
};

struct MedianStage {
  int window_len = 3;
};

using StabilizerStage = std::variant<ClipStage, SubstituteStage, MedianStage>;

class StabilizerPolicy {
 public:
  StabilizerPolicy() = default;

  StabilizerPolicy& clip(double lo, double hi);
  StabilizerPolicy& substitute(double lo = -std::numeric_limits<double>::infinity(),
                               double hi = std::numeric_limits<double>::infinity());
  StabilizerPolicy& median(int window_len = 3);

  const std::vector<StabilizerStage>& stages() const { return stages_; }
  bool empty() const { return stages_.empty(); }

 private:
  std::vector<StabilizerStage> stages_;
};

struct AccelConfig {
  // Absolute guard on |second difference|. When unset, 1e-12 times the
  // dynamic range of the newest iterate is used.
  std::optional<double> denominator_epsilon;
  StabilizerPolicy policy;
  bool per_element_selection = true;
  // Layout used by 2-D median filtering; 1-D when unset.
  std::optional<Shape> grid;
};

/// 1e-12 * (max - min) of x3.
double default_denominator_epsilon(const Vector& x3);

/// (x3*x1 - x2^2) / (x3 + x1 - 2*x2) elementwise; x3 where |denominator| <= eps.
Vector nl_combine(const Vector& x1, const Vector& x2, const Vector& x3, double eps);

/// Chooses, per element (or for the whole vector), the three-point window whose
/// second difference is larger in magnitude and applies nl_combine to it.
Vector mnl_combine(const IterateWindow& w, double eps, bool per_element_selection = true);

Vector stabilize(Vector candidate, const IterateWindow& w, const StabilizerPolicy& policy,
                 std::optional<Shape> grid = std::nullopt);

Vector accelerate(const IterateWindow& w, const AccelConfig& cfg);

/// Median of a (2h+1)-neighbourhood with windows shrinking at the boundaries.
/// Even-sized boundary windows take the lower median.
Vector median_filter(const Vector& x, int window_len, std::optional<Shape> grid = std::nullopt);

}  // namespace nlaccel
