#include <cmath>
#include <sstream>

#include "doctest.h"
#include "nlaccel/convlab.hpp"

using namespace nlaccel;

namespace {

ConvergenceCase C(const char* id) { return ConvergenceCase::parse(id); }

// Oracle: e_NL / e3 straight from the defining expression.
double ratio_oracle(double e1, double e2, double e3) {
  return std::abs((e3 * e1 - e2 * e2) / (e3 + e1 - 2 * e2) / e3);
}

double delta0_31_oracle(double a) {
  return (a * a - a + 1 - std::sqrt(2 * a * a - 2 * a + 1)) / (a * a);
}

}  // namespace

TEST_CASE("case ids, regimes and sign patterns") {
  const auto all = ConvergenceCase::all();
  CHECK(all.size() == 12);
  for (const auto& c : all) {
    CHECK(ConvergenceCase::parse(c.id()) == c);
    CHECK(c.regime() == (c.family == 1 ? Regime::linear
                                        : c.family == 2 ? Regime::sublinear : Regime::superlinear));
  }
  CHECK(C("1.1").sign_e1e2() == 1);
  CHECK(C("1.1").sign_e3e2() == 1);
  CHECK(C("1.2").sign_e1e2() == -1);
  CHECK(C("1.2").sign_e3e2() == -1);
  CHECK(C("2.3").sign_e1e2() == 1);
  CHECK(C("2.3").sign_e3e2() == -1);
  CHECK(C("3.4").sign_e1e2() == -1);
  CHECK(C("3.4").sign_e3e2() == 1);
  CHECK_THROWS_AS(ConvergenceCase::parse("4.1"), std::invalid_argument);
  CHECK_THROWS_AS(ConvergenceCase::parse("1.5"), std::invalid_argument);
}

TEST_CASE("synth_error_triple") {
  auto t = synth_error_triple(C("1.3"), 0.5, 0.0, 2.0);
  CHECK(t.e1 == 4.0);
  CHECK(t.e2 == 2.0);
  CHECK(t.e3 == -1.0);
  t = synth_error_triple(C("2.1"), 0.5, 0.2, 1.0);
  CHECK(t.e1 == doctest::Approx(2.0).epsilon(1e-15));
  CHECK(t.e3 == doctest::Approx(0.6).epsilon(1e-15));
  t = synth_error_triple(C("1.1"), 0.5, 0.0, 1.0);
  CHECK(t.e1 == 2.0);
  CHECK(t.e3 == 0.5);
  t = synth_error_triple(C("3.2"), 0.4, 0.5, 1.0);
  CHECK(t.e1 == doctest::Approx(-2.5));
  CHECK(t.e3 == doctest::Approx(-0.2));

  // Sublinear upper bound 1/alpha - 1 is admissible, superlinear 1 is not.
  CHECK(delta_admissible(C("2.1"), 0.5, 1.0));
  CHECK_FALSE(delta_admissible(C("2.1"), 0.5, 1.0 + 1e-9));
  CHECK_FALSE(delta_admissible(C("2.1"), 0.5, 0.0));
  CHECK(delta_admissible(C("3.1"), 0.5, 0.999));
  CHECK_FALSE(delta_admissible(C("3.1"), 0.5, 1.0));
  CHECK_THROWS_AS(synth_error_triple(C("2.1"), 0.5, 1.5, 1.0), std::invalid_argument);
  CHECK_THROWS_AS(synth_error_triple(C("1.1"), 1.0, 0.0, 1.0), std::invalid_argument);
  CHECK_THROWS_AS(synth_error_triple(C("1.1"), 0.5, 0.0, 0.0), std::invalid_argument);
}

TEST_CASE("nl_error_ratio") {
  CHECK(nl_error_ratio(4, 2, -1) == doctest::Approx(8.0).epsilon(1e-15));
  CHECK(nl_error_ratio(2, 1, 0.5) == 0.0);
  const double a = 0.5, d = 0.2;
  CHECK(nl_error_ratio(2, 1, 0.6) ==
        doctest::Approx(d / ((1 + d) * ((a - 1) * (a - 1) + d * a * a))).epsilon(1e-12));
  CHECK_THROWS_AS(nl_error_ratio(1, 1, 1), std::domain_error);
  CHECK_THROWS_AS(nl_error_ratio(1, 2, 0), std::domain_error);
}

TEST_CASE("closed forms at named points") {
  CHECK(closed_form_ratio(C("1.3"), 0.5, 0.0) == doctest::Approx(8.0).epsilon(1e-15));
  for (double a : {0.1, 0.3, 0.5, 0.7, 0.9}) {
    CHECK(closed_form_ratio(C("2.1"), a, 1.0 / a - 1.0) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(closed_form_ratio(C("1.3"), a, 0) == doctest::Approx(2 / std::abs((a + 1) * (a + 1) - 2)));
    CHECK(closed_form_ratio(C("1.4"), a, 0) == doctest::Approx(2 / std::abs((a - 1) * (a - 1) - 2)));
    CHECK(closed_form_ratio(C("1.3"), a, 0) > 1.0);
    CHECK(closed_form_ratio(C("1.4"), a, 0) > 1.0);
    CHECK(closed_form_ratio(C("1.1"), a, 0) == 0.0);
    CHECK(closed_form_ratio(C("1.2"), a, 0) == 0.0);
  }
  CHECK_THROWS_AS(closed_form_ratio(C("3.1"), 0.5, 1.2), std::invalid_argument);
}

TEST_CASE("delta0 thresholds") {
  CHECK(delta0(C("3.2"), 0.36110) == doctest::Approx(0.63889).epsilon(1e-4));
  CHECK(delta0(C("3.1"), 0.999) == doctest::Approx(delta0_31_oracle(0.999)).epsilon(1e-12));
  CHECK(delta0(C("3.1"), 0.999) < 1e-3);
  for (int i = 1; i <= 19; ++i) {
    const double a = 0.05 * i;
    for (const char* id : {"3.1", "3.2"}) {
      const double d0 = delta0(C(id), a);
      CHECK(d0 > 0.0);
      CHECK(d0 < 1.0);
    }
    CHECK(delta0(C("3.1"), a) == doctest::Approx(delta0_31_oracle(a)).epsilon(1e-12));
    // Case 3.1: accelerated below delta0, diverges above.
    const double d0 = delta0(C("3.1"), a);
    CHECK(closed_form_ratio(C("3.1"), a, d0 * (1 - 1e-6)) < 1.0);
    CHECK(closed_form_ratio(C("3.1"), a, d0 + 1e-6 * (1 - d0)) > 1.0);
    CHECK(closed_form_ratio(C("3.1"), a, d0) == doctest::Approx(1.0).epsilon(1e-9));
  }
  CHECK_THROWS_AS(delta0(C("2.1"), 0.5), std::invalid_argument);
}

TEST_CASE("alpha star") {
  const AlphaStar s = find_alpha_star();
  CHECK(s.alpha == doctest::Approx(0.36110).epsilon(1e-4 / 0.36110));
  CHECK(std::abs(s.residual) < 1e-8);
  CHECK(s.lo_residual * s.hi_residual < 0.0);
  // Quadratic boundary delta = 1 - alpha accelerates exactly above alpha star.
  for (double a : {0.1, 0.2, 0.3, 0.35, 0.37, 0.4, 0.6, 0.9}) {
    const double r = closed_form_ratio(C("3.2"), a, 1.0 - a);
    CHECK((r < 1.0) == (a > s.alpha));
  }
}

TEST_CASE("direct and closed forms agree for every case and scale") {
  const auto rows = case_table(default_alpha_grid(), default_delta_fractions(), default_e2_values());
  CHECK(default_alpha_grid().size() == 9);
  CHECK(default_delta_fractions().size() == 9);
  CHECK(default_e2_values() == std::vector<double>{1e-6, 1.0, 1e6});
  // 4 linear cases x 9 alphas + 8 others x 9 x 9, each at 3 scales.
  CHECK(rows.size() == (4 * 9 + 8 * 81) * 3);
  for (const CaseRow& r : rows) {
    const ErrorTriple t = synth_error_triple(r.c, r.alpha, r.delta, r.e2);
    CHECK(r.direct == doctest::Approx(ratio_oracle(t.e1, t.e2, t.e3)).epsilon(1e-12));
    CHECK(r.rel_diff < 1e-9);
    CHECK(r.abs_diff < 1e-9);
    if (r.c.family == 2 && r.c.variant == 2) CHECK(r.direct < 1.0);
    if (r.c.family == 2 && r.c.variant >= 3) CHECK(r.direct > 1.0);
    // Zero up to rounding: e1, e3 are formed by division and multiplication by alpha.
    if (r.c.family == 1 && r.c.variant <= 2) CHECK(r.direct < 1e-13);
    if (r.c.family == 1 && r.c.variant >= 3) CHECK(r.direct > 1.0);
  }
}

TEST_CASE("case table CSV") {
  const auto rows = case_table({0.5}, {0.5});
  std::ostringstream os;
  write_case_table_csv(os, rows, find_alpha_star());
  const std::string csv = os.str();
  CHECK(csv.rfind("case,alpha,delta,e2,direct_ratio,closed_form_ratio,abs_difference\n", 0) == 0);
  CHECK(csv.find("\n1.3,0.5,0,1,8,8,") != std::string::npos);
  CHECK(csv.find("alpha_star") != std::string::npos);
  std::istringstream lines(csv);
  std::string line;
  int n = 0;
  while (std::getline(lines, line)) ++n;
  CHECK(n == 1 + 12 + 1);
}
