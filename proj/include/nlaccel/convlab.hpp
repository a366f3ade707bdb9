#pragma once

// Convergence lab: error triples for every sign/rate regime of a sequence
// converging with ratio alpha, the NL error ratio |e_NL / e3| evaluated
// directly, and its closed form.

#include <optional>
#include <ostream>
#include <string>
#include <utility>
#include <vector>

namespace nlaccel {

enum class Regime { linear, sublinear, superlinear };

/// Cases "f.v": family f in {1, 2, 3} sets |alpha2| to alpha, (1+delta)alpha
/// or (1-delta)alpha; variant v in {1..4} sets the signs of (e1*e2, e3*e2)
/// to (+,+), (-,-), (+,-), (-,+).
struct ConvergenceCase {
  int family = 1;
  int variant = 1;

  Regime regime() const;
  int sign_e1e2() const;
  int sign_e3e2() const;
  std::string id() const;

  static ConvergenceCase parse(const std::string& id);
  static std::vector<ConvergenceCase> all();
  bool operator==(const ConvergenceCase&) const = default;
};

struct ErrorTriple {
  double e1;
  double e2;
  double e3;
};

/// Admissible delta interval (lo exclusive, hi inclusive for the sublinear
/// family, exclusive otherwise). Linear cases ignore delta.
std::pair<double, double> admissible_delta(ConvergenceCase c, double alpha);
bool delta_admissible(ConvergenceCase c, double alpha, double delta);

/// Throws std::invalid_argument when alpha is outside (0, 1), e2 <= 0, or
/// delta is not admissible.
ErrorTriple synth_error_triple(ConvergenceCase c, double alpha, double delta, double e2);

/// |e_NL / e3|. Throws std::domain_error on a zero denominator or zero e3.
double nl_error_ratio(double e1, double e2, double e3);
inline double nl_error_ratio(const ErrorTriple& t) { return nl_error_ratio(t.e1, t.e2, t.e3); }

double closed_form_ratio(ConvergenceCase c, double alpha, double delta);

/// Superlinear threshold in delta above which NL diverges (cases 3.1, 3.2).
double delta0(ConvergenceCase c, double alpha);

struct AlphaStar {
  double alpha;
  double residual;     // delta0_3.2(alpha) - (1 - alpha)
  double lo_residual;  // at the initial bracket ends
  double hi_residual;
  int iterations;
};

/// Root of delta0_3.2(alpha) = 1 - alpha by bisection.
AlphaStar find_alpha_star(double tol = 1e-8);

struct CaseRow {
  ConvergenceCase c;
  double alpha;
  double delta;
  double e2;
  double direct;
  double closed_form;
  double abs_diff;
  double rel_diff;  // abs_diff / |closed_form|, or abs_diff when closed_form == 0
};

std::vector<double> default_alpha_grid();
/// Fractions of the admissible delta interval.
std::vector<double> default_delta_fractions();
std::vector<double> default_e2_values();

/// For each case, alpha, delta fraction and e2; linear cases use delta = 0
/// and produce one row per (alpha, e2).
std::vector<CaseRow> case_table(const std::vector<double>& alpha_grid,
                                const std::vector<double>& delta_fractions,
                                const std::vector<double>& e2_values = {1.0});

void write_case_table_csv(std::ostream& os, const std::vector<CaseRow>& rows,
                          const std::optional<AlphaStar>& alpha_star = std::nullopt);

}  // namespace nlaccel
