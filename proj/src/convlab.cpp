#include "nlaccel/convlab.hpp"

#include <cmath>
#include <stdexcept>

#include "nlaccel/metrics.hpp"

namespace nlaccel {

namespace {

void check_case(ConvergenceCase c) {
  if (c.family < 1 || c.family > 3 || c.variant < 1 || c.variant > 4) {
    throw std::invalid_argument("unknown convergence case " + c.id());
  }
}

void check_alpha(double alpha) {
  if (!(alpha > 0.0 && alpha < 1.0)) throw std::invalid_argument("alpha must lie in (0, 1)");
}

}  // namespace

Regime ConvergenceCase::regime() const {
  switch (family) {
    case 1: return Regime::linear;
    case 2: return Regime::sublinear;
    default: return Regime::superlinear;
  }
}

int ConvergenceCase::sign_e1e2() const { return variant == 1 || variant == 3 ? 1 : -1; }
int ConvergenceCase::sign_e3e2() const { return variant == 1 || variant == 4 ? 1 : -1; }

std::string ConvergenceCase::id() const {
  return std::to_string(family) + "." + std::to_string(variant);
}

ConvergenceCase ConvergenceCase::parse(const std::string& id) {
  if (id.size() != 3 || id[1] != '.') throw std::invalid_argument("bad case id '" + id + "'");
  ConvergenceCase c{id[0] - '0', id[2] - '0'};
  check_case(c);
  return c;
}

std::vector<ConvergenceCase> ConvergenceCase::all() {
  std::vector<ConvergenceCase> out;
  for (int f = 1; f <= 3; ++f) {
    for (int v = 1; v <= 4; ++v) out.push_back({f, v});
  }
  return out;
}

std::pair<double, double> admissible_delta(ConvergenceCase c, double alpha) {
  check_case(c);
  check_alpha(alpha);
  switch (c.family) {
    case 1: return {0.0, 0.0};
    case 2: return {0.0, 1.0 / alpha - 1.0};
    default: return {0.0, 1.0};
  }
}

bool delta_admissible(ConvergenceCase c, double alpha, double delta) {
  if (c.family == 1) return true;
  const auto [lo, hi] = admissible_delta(c, alpha);
  return delta > lo && (c.family == 2 ? delta <= hi : delta < hi);
}

ErrorTriple synth_error_triple(ConvergenceCase c, double alpha, double delta, double e2) {
  check_case(c);
  check_alpha(alpha);
  if (!(e2 > 0.0)) throw std::invalid_argument("e2 must be positive");
  if (!delta_admissible(c, alpha, delta)) {
    throw std::invalid_argument("delta outside the admissible range for case " + c.id());
  }
  double a2 = alpha;
  if (c.family == 2) a2 = (1.0 + delta) * alpha;
  if (c.family == 3) a2 = (1.0 - delta) * alpha;
  return {c.sign_e1e2() * e2 / alpha, e2, c.sign_e3e2() * a2 * e2};
}

double nl_error_ratio(double e1, double e2, double e3) {
  const double den = e3 + e1 - 2.0 * e2;
  if (den == 0.0) throw std::domain_error("nl_error_ratio: zero second difference");
  if (e3 == 0.0) throw std::domain_error("nl_error_ratio: e3 is zero");
  return std::abs((e3 * e1 - e2 * e2) / den / e3);
}

double closed_form_ratio(ConvergenceCase c, double a, double d) {
  check_case(c);
  check_alpha(a);
  if (!delta_admissible(c, a, d)) {
    throw std::invalid_argument("delta outside the admissible range for case " + c.id());
  }
  const double p = (a + 1.0) * (a + 1.0);
  const double m = (a - 1.0) * (a - 1.0);
  const double a2 = a * a;
  switch (c.family) {
    case 1:
      switch (c.variant) {
        case 1:
        case 2: return 0.0;
        case 3: return 2.0 / std::abs(p - 2.0);
        default: return 2.0 / std::abs(m - 2.0);
      }
    case 2:
      switch (c.variant) {
        case 1: return d / ((1.0 + d) * (m + d * a2));
        case 2: return d / ((1.0 + d) * (p + d * a2));
        case 3: return (2.0 + d) / ((1.0 + d) * std::abs(p - 2.0 + d * a2));
        default: return (2.0 + d) / ((1.0 + d) * std::abs(m - 2.0 + d * a2));
      }
    default:
      switch (c.variant) {
        case 1: return d / ((1.0 - d) * std::abs(m - d * a2));
        case 2: return d / ((1.0 - d) * (p - d * a2));
        case 3: return (2.0 - d) / ((1.0 - d) * std::abs(p - 2.0 - d * a2));
        default: return (2.0 - d) / ((1.0 - d) * std::abs(m - 2.0 - d * a2));
      }
  }
}

double delta0(ConvergenceCase c, double alpha) {
  check_alpha(alpha);
  const double a2 = alpha * alpha;
  if (c == ConvergenceCase{3, 1}) {
    return (a2 - alpha + 1.0 - std::sqrt(2.0 * a2 - 2.0 * alpha + 1.0)) / a2;
  }
  if (c == ConvergenceCase{3, 2}) {
    return (a2 + alpha + 1.0 - std::sqrt(2.0 * a2 + 2.0 * alpha + 1.0)) / a2;
  }
  throw std::invalid_argument("delta0 is defined for cases 3.1 and 3.2 only");
}

AlphaStar find_alpha_star(double tol) {
  const ConvergenceCase c32{3, 2};
  auto f = [&](double a) { return delta0(c32, a) - (1.0 - a); };
  double lo = 1e-6;
  double hi = 1.0 - 1e-6;
  AlphaStar out{};
  out.lo_residual = f(lo);
  out.hi_residual = f(hi);
  if (out.lo_residual * out.hi_residual > 0.0) {
    throw std::runtime_error("find_alpha_star: bracket does not change sign");
  }
  double flo = out.lo_residual;
  int it = 0;
  while (hi - lo > tol && it < 200) {
    const double mid = 0.5 * (lo + hi);
    const double fm = f(mid);
    if ((fm < 0.0) == (flo < 0.0)) {
      lo = mid;
      flo = fm;
    } else {
      hi = mid;
    }
    ++it;
  }
  out.alpha = 0.5 * (lo + hi);
  out.residual = f(out.alpha);
  out.iterations = it;
  return out;
}

std::vector<double> default_alpha_grid() {
  std::vector<double> g;
  for (int i = 1; i <= 9; ++i) g.push_back(i / 10.0);
  return g;
}

std::vector<double> default_delta_fractions() { return default_alpha_grid(); }

std::vector<double> default_e2_values() { return {1e-6, 1.0, 1e6}; }

std::vector<CaseRow> case_table(const std::vector<double>& alpha_grid,
                                const std::vector<double>& delta_fractions,
                                const std::vector<double>& e2_values) {
  std::vector<CaseRow> rows;
  for (const ConvergenceCase& c : ConvergenceCase::all()) {
    for (double alpha : alpha_grid) {
      std::vector<double> deltas;
      if (c.family == 1) {
        deltas.push_back(0.0);
      } else {
        const auto [lo, hi] = admissible_delta(c, alpha);
        for (double f : delta_fractions) deltas.push_back(lo + f * (hi - lo));
      }
      for (double delta : deltas) {
        for (double e2 : e2_values) {
          CaseRow r{c, alpha, delta, e2, 0.0, 0.0, 0.0, 0.0};
          r.direct = nl_error_ratio(synth_error_triple(c, alpha, delta, e2));
          r.closed_form = closed_form_ratio(c, alpha, delta);
          r.abs_diff = std::abs(r.direct - r.closed_form);
          r.rel_diff = r.closed_form != 0.0 ? r.abs_diff / std::abs(r.closed_form) : r.abs_diff;
          rows.push_back(r);
        }
      }
    }
  }
  return rows;
}

void write_case_table_csv(std::ostream& os, const std::vector<CaseRow>& rows,
                          const std::optional<AlphaStar>& alpha_star) {
  os << "case,alpha,delta,e2,direct_ratio,closed_form_ratio,abs_difference\n";
  for (const CaseRow& r : rows) {
    os << r.c.id() << ',' << csv_number(r.alpha) << ',' << csv_number(r.delta) << ','
       << csv_number(r.e2) << ',' << csv_number(r.direct) << ',' << csv_number(r.closed_form)
       << ',' << csv_number(r.abs_diff) << '\n';
  }
  if (alpha_star) {
    os << "alpha_star," << csv_number(alpha_star->alpha) << ",,,,,"
       << csv_number(std::abs(alpha_star->residual)) << '\n';
  }
}

}  // namespace nlaccel
