#include <cmath>
#include <limits>
#include <random>

#include "doctest.h"
#include "nlaccel/accel.hpp"

using namespace nlaccel;

namespace {

Vector vec(std::initializer_list<double> v) {
  Vector out(static_cast<Index>(v.size()));
  Index i = 0;
  for (double x : v) out[i++] = x;
  return out;
}

Vector scalar(double v) { return vec({v}); }

Vector random_vector(std::mt19937_64& gen, Index n, double lo = -5.0, double hi = 5.0) {
  std::uniform_real_distribution<double> d(lo, hi);
  Vector v(n);
  for (Index i = 0; i < n; ++i) v[i] = d(gen);
  return v;
}

// Aitken form x3 - (x3-x2)^2 / (x3 - 2 x2 + x1), evaluated independently.
double aitken(double x1, double x2, double x3) {
  return x3 - (x3 - x2) * (x3 - x2) / (x3 - 2.0 * x2 + x1);
}

}  // namespace

TEST_CASE("nl_combine recovers the limit of a geometric scalar sequence") {
  const Vector r = nl_combine(scalar(1.5), scalar(1.75), scalar(1.875), 1e-12);
  CHECK(r[0] == 2.0);
}

TEST_CASE("nl_combine on the diverging sign-alternating triple") {
  const double e_nl = nl_combine(scalar(4), scalar(2), scalar(-1), 1e-12)[0];
  CHECK(e_nl == doctest::Approx(8.0).epsilon(1e-15));
  const double alpha = 0.5;
  CHECK(std::abs(e_nl / -1.0) == doctest::Approx(2.0 / std::abs((alpha + 1) * (alpha + 1) - 2.0)));
}

TEST_CASE("nl_combine falls back to x3 on a vanishing second difference") {
  for (double c : {-3.0, 0.0, 7.25}) {
    CHECK(nl_combine(scalar(c), scalar(c), scalar(c), 1e-12)[0] == c);
  }
  // Linear sequence: denominator exactly zero.
  CHECK(nl_combine(scalar(1), scalar(2), scalar(3), 0.0)[0] == 3.0);
}

TEST_CASE("nl_combine rejects bad arguments") {
  CHECK_THROWS_AS(nl_combine(vec({1, 2}), scalar(1), scalar(1), 0.0), std::invalid_argument);
  CHECK_THROWS_AS(nl_combine(scalar(1), scalar(1), scalar(1), -1.0), std::invalid_argument);
}

TEST_CASE("nl_combine is symmetric, affine equivariant and equals the Aitken form") {
  std::mt19937_64 gen(11);
  for (int rep = 0; rep < 20; ++rep) {
    const Vector x1 = random_vector(gen, 50);
    const Vector x2 = random_vector(gen, 50);
    const Vector x3 = random_vector(gen, 50);
    const Vector f = nl_combine(x1, x2, x3, 0.0);
    const Vector b = nl_combine(x3, x2, x1, 0.0);
    const double a = -2.5, c = 3.0;
    const Vector aff = nl_combine((a * x1.array() + c).matrix(), (a * x2.array() + c).matrix(),
                                  (a * x3.array() + c).matrix(), 0.0);
    for (Index i = 0; i < 50; ++i) {
      const double den = x3[i] + x1[i] - 2 * x2[i];
      if (std::abs(den) < 1e-3) continue;
      const double scale = std::max(1.0, std::abs(f[i]));
      CHECK(std::abs(f[i] - b[i]) <= 1e-10 * scale);
      CHECK(std::abs(aff[i] - (a * f[i] + c)) <= 1e-9 * std::max(1.0, std::abs(aff[i])));
      CHECK(std::abs(f[i] - aitken(x1[i], x2[i], x3[i])) <= 1e-10 * scale);
    }
  }
}

TEST_CASE("nl_combine is exact on geometric errors, converging or diverging") {
  for (double alpha : {0.3, -0.7, 1.8, -2.5}) {
    const double x = 4.0, e = 0.75;
    const Vector r = nl_combine(scalar(x + alpha * e), scalar(x + alpha * alpha * e),
                                scalar(x + alpha * alpha * alpha * e), 1e-12);
    CHECK(r[0] == doctest::Approx(x).epsilon(1e-12));
  }
}

TEST_CASE("mnl_combine selects the older window when its second difference is larger") {
  const IterateWindow w{scalar(1.8), scalar(1.4), scalar(1.2), scalar(1.1)};
  // sigma0 = 1.2 + 1.8 - 2.8 = 0.2, sigma1 = 1.1 + 1.4 - 2.4 = 0.1
  const double older = aitken(1.8, 1.4, 1.2);
  CHECK(older == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(mnl_combine(w, 1e-12)[0] == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("mnl_combine agrees with nl_combine on the newer window") {
  std::mt19937_64 gen(5);
  const Vector x1 = scalar(1.5), x2 = scalar(1.75), x3 = scalar(1.875);
  // sigma1 = 0.125; choose x0 so that |sigma0| = |x2 + x0 - 2 x1| <= 0.125.
  for (double x0 : {1.25, 1.3, 1.2}) {
    const IterateWindow w{scalar(x0), x1, x2, x3};
    CHECK(mnl_combine(w, 1e-12)[0] == nl_combine(x1, x2, x3, 1e-12)[0]);
  }
  // Elementwise property on random windows.
  for (int rep = 0; rep < 10; ++rep) {
    IterateWindow w{random_vector(gen, 40), random_vector(gen, 40), random_vector(gen, 40),
                    random_vector(gen, 40)};
    const Vector m = mnl_combine(w, 0.0);
    const Vector n = nl_combine(w.x1, w.x2, w.x3, 0.0);
    for (Index i = 0; i < 40; ++i) {
      const double s0 = w.x2[i] + w.x0[i] - 2 * w.x1[i];
      const double s1 = w.x3[i] + w.x1[i] - 2 * w.x2[i];
      if (std::abs(s0) <= std::abs(s1)) CHECK(m[i] == n[i]);
    }
  }
}

TEST_CASE("mnl_combine on a converged window and with both differences below eps") {
  const IterateWindow w{scalar(3), scalar(3), scalar(3), scalar(3)};
  CHECK(mnl_combine(w, 1e-12)[0] == 3.0);
  const IterateWindow tiny{scalar(1.0), scalar(1.0 + 1e-14), scalar(1.0), scalar(1.0 + 2e-14)};
  CHECK(mnl_combine(tiny, 1e-12)[0] == 1.0 + 2e-14);
}

TEST_CASE("mnl_combine whole-vector selection compares max-norms") {
  // Element 0 alone prefers the newer window; the max-norm of sigma0 is larger,
  // so whole-vector mode takes the older window everywhere.
  const IterateWindow w{vec({1.3, 1.8}), vec({1.5, 1.4}), vec({1.75, 1.2}), vec({1.875, 1.1})};
  const Vector per = mnl_combine(w, 1e-12, true);
  const Vector whole = mnl_combine(w, 1e-12, false);
  CHECK(per[0] == 2.0);
  CHECK(whole[0] == doctest::Approx(aitken(1.3, 1.5, 1.75)));
  CHECK(whole[1] == doctest::Approx(1.0));
}

TEST_CASE("IterateWindow validation") {
  CHECK_THROWS_AS((IterateWindow{scalar(1), scalar(1), vec({1, 2}), scalar(1)}.validate()),
                  std::invalid_argument);
  CHECK_THROWS_AS((IterateWindow{Vector(), Vector(), Vector(), Vector()}.validate()),
                  std::invalid_argument);
}

TEST_CASE("stabilize: clip, substitute and median stages") {
  const IterateWindow w{vec({0, 0}), vec({0, 0}), vec({0, 0}), vec({5, 9})};
  CHECK(stabilize(vec({300, 100}), w, StabilizerPolicy().clip(0, 255)) == vec({255, 100}));

  const double nan = std::numeric_limits<double>::quiet_NaN();
  const double inf = std::numeric_limits<double>::infinity();
  CHECK(stabilize(vec({nan, 7}), w, StabilizerPolicy().substitute()) == vec({5, 7}));
  CHECK(stabilize(vec({inf, 7}), w, StabilizerPolicy().substitute()) == vec({5, 7}));
  CHECK(stabilize(vec({-1, 20}), w, StabilizerPolicy().substitute(0, 10)) == vec({5, 9}));

  const IterateWindow w3{Vector::Zero(3), Vector::Zero(3), Vector::Zero(3), Vector::Zero(3)};
  CHECK(stabilize(vec({0, 100, 0}), w3, StabilizerPolicy().median(3)) == vec({0, 0, 0}));
  CHECK(stabilize(vec({300, -4}), w, StabilizerPolicy()) == vec({300, -4}));
}

TEST_CASE("stabilize applies stages in order") {
  const IterateWindow w{vec({0, 0, 0}), vec({0, 0, 0}), vec({0, 0, 0}), vec({1, 1, 1})};
  const Vector c = vec({500, 2, 3});
  // substitute -> [1, 2, 3] -> shrinking medians (1,2), (1,2,3), (2,3)
  CHECK(stabilize(c, w, StabilizerPolicy().substitute(0, 10).median(3)) == vec({1, 2, 2}));
  // median -> [2, 3, 2], already in range
  CHECK(stabilize(c, w, StabilizerPolicy().median(3).substitute(0, 10)) == vec({2, 3, 2}));
}

TEST_CASE("clip maps non-finite candidates into range") {
  const IterateWindow w{vec({0}), vec({0}), vec({0}), vec({3})};
  const double nan = std::numeric_limits<double>::quiet_NaN();
  const Vector r = stabilize(vec({nan}), w, StabilizerPolicy().clip(0, 255));
  CHECK(r[0] >= 0.0);
  CHECK(r[0] <= 255.0);
  CHECK(stabilize(vec({-std::numeric_limits<double>::infinity()}), w,
                  StabilizerPolicy().clip(0, 255))[0] == 0.0);
}

TEST_CASE("policy builder validates stage parameters") {
  CHECK_THROWS_AS(StabilizerPolicy().clip(1, 1), std::invalid_argument);
  CHECK_THROWS_AS(StabilizerPolicy().clip(2, 1), std::invalid_argument);
  CHECK_THROWS_AS(StabilizerPolicy().median(4), std::invalid_argument);
  CHECK_THROWS_AS(StabilizerPolicy().median(1), std::invalid_argument);
  CHECK(StabilizerPolicy().clip(0, 1).median(5).stages().size() == 2);
}

TEST_CASE("median_filter edges and 2-D windows") {
  // Brute-force oracle: sort each shrinking neighbourhood, lower median.
  std::mt19937_64 gen(3);
  const Vector x = random_vector(gen, 17);
  for (int len : {3, 5, 7}) {
    const Vector m = median_filter(x, len);
    const int h = len / 2;
    for (Index i = 0; i < x.size(); ++i) {
      std::vector<double> nb;
      for (Index j = std::max<Index>(0, i - h); j <= std::min<Index>(x.size() - 1, i + h); ++j) {
        nb.push_back(x[j]);
      }
      std::sort(nb.begin(), nb.end());
      CHECK(m[i] == nb[(nb.size() - 1) / 2]);
    }
  }
  // Impulse in a 3x3 image is removed by the 3x3 median.
  Vector img = Vector::Zero(9);
  img[4] = 100;
  CHECK(median_filter(img, 3, Shape::image(3, 3)).isZero());
  // Without a grid the same data is filtered as a 1-D signal.
  Vector line = Vector::Zero(9);
  line[4] = 100;
  CHECK(median_filter(line, 3).isZero());
}

TEST_CASE("accelerate composes MNL with the stabilizer chain") {
  const IterateWindow geo{scalar(1.25), scalar(1.5), scalar(1.75), scalar(1.875)};
  CHECK(accelerate(geo, AccelConfig{})[0] == 2.0);

  // Nearly linear window: tiny second difference, huge NL spike.
  const IterateWindow spike{scalar(1.0), scalar(2.0), scalar(3.0 + 1e-9), scalar(4.0 + 3e-9)};
  const Vector raw = mnl_combine(spike, 0.0);
  CHECK(raw[0] < -1e6);
  AccelConfig cfg;
  cfg.denominator_epsilon = 0.0;
  cfg.policy.clip(0, 255);
  CHECK(accelerate(spike, cfg)[0] == 0.0);

  const IterateWindow flat{scalar(9), scalar(9), scalar(9), scalar(9)};
  AccelConfig any;
  any.policy.substitute(0, 10).median(3).clip(-1, 20);
  CHECK(accelerate(flat, any)[0] == 9.0);
}

TEST_CASE("default epsilon scales with the dynamic range of x3") {
  CHECK(default_denominator_epsilon(vec({-1, 3})) == doctest::Approx(4e-12));
  CHECK(default_denominator_epsilon(vec({2, 2})) == 0.0);
}

TEST_CASE("clip output always lies within bounds") {
  std::mt19937_64 gen(9);
  for (int rep = 0; rep < 10; ++rep) {
    IterateWindow w{random_vector(gen, 30), random_vector(gen, 30), random_vector(gen, 30),
                    random_vector(gen, 30)};
    AccelConfig cfg;
    cfg.policy.clip(-1, 1);
    const Vector r = accelerate(w, cfg);
    CHECK(r.minCoeff() >= -1.0);
    CHECK(r.maxCoeff() <= 1.0);
  }
}
