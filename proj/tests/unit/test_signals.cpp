#include <cmath>
#include <filesystem>
#include <set>

#include "doctest.h"
#include "nlaccel/signals.hpp"

using namespace nlaccel;

namespace {

std::filesystem::path temp_path(const std::string& name) {
  return std::filesystem::temp_directory_path() / ("nlaccel_test_" + name);
}

}  // namespace

TEST_CASE("Philox4x32-10 known-answer vectors") {
  using A4 = std::array<uint32_t, 4>;
  CHECK(philox4x32_10({0, 0, 0, 0}, {0, 0}) == A4{0x6627e8d5, 0xe169c58d, 0xbc57ac4c, 0x9b00dbd8});
  CHECK(philox4x32_10({0xffffffff, 0xffffffff, 0xffffffff, 0xffffffff}, {0xffffffff, 0xffffffff}) ==
        A4{0x408f276d, 0x41c83b0e, 0xa20bc7c6, 0x6d5451fd});
  CHECK(philox4x32_10({0x243f6a88, 0x85a308d3, 0x13198a2e, 0x03707344}, {0xa4093822, 0x299f31d0}) ==
        A4{0xd16cfe09, 0x94fdcceb, 0x5001e420, 0x24126ea1});
}

TEST_CASE("RandomStream determinism and stream independence") {
  RandomStream a(42, 3), b(42, 3), c(42, 4), d(43, 3);
  bool differ_c = false, differ_d = false;
  for (int i = 0; i < 100; ++i) {
    const uint32_t va = a.next_u32();
    CHECK(va == b.next_u32());
    differ_c |= va != c.next_u32();
    differ_d |= va != d.next_u32();
  }
  CHECK(differ_c);
  CHECK(differ_d);
}

TEST_CASE("RandomStream moments") {
  RandomStream r(7, 0);
  const int n = 200000;
  double su = 0, su2 = 0, sn = 0, sn2 = 0;
  double umin = 1, umax = 0;
  for (int i = 0; i < n; ++i) {
    const double u = r.uniform();
    umin = std::min(umin, u);
    umax = std::max(umax, u);
    su += u;
    su2 += u * u;
    const double z = r.normal();
    sn += z;
    sn2 += z * z;
  }
  CHECK(umin >= 0.0);
  CHECK(umax < 1.0);
  // 5 sigma bounds on the sample means.
  CHECK(std::abs(su / n - 0.5) < 5 * std::sqrt(1.0 / 12 / n));
  CHECK(std::abs(su2 / n - 1.0 / 3) < 5 * std::sqrt(4.0 / 45 / n));
  CHECK(std::abs(sn / n) < 5 / std::sqrt(static_cast<double>(n)));
  CHECK(std::abs(sn2 / n - 1.0) < 5 * std::sqrt(2.0 / n));
}

TEST_CASE("gen_lp_signal") {
  CHECK(bandwidth_for_osr(500, 8) == 31);
  RandomStream r1(1, 0), r2(1, 0);
  const Vector x = gen_lp_signal(500, 8, r1);
  CHECK(x == gen_lp_signal(500, 8, r2));
  CHECK(std::sqrt(x.squaredNorm() / 500) == doctest::Approx(1.0).epsilon(1e-12));
  const LowPassDFTFilter lp(500, 31);
  CHECK((lp_filter(x, lp) - x).cwiseAbs().maxCoeff() < 1e-10);
  // The top retained bin is 31, not 30: it carries energy unless unlucky.
  const LowPassDFTFilter narrower(500, 30);
  CHECK((lp_filter(x, narrower) - x).norm() > 1e-6);
  RandomStream r3(1, 0);
  CHECK_THROWS_AS(gen_lp_signal(10, 8, r3), std::invalid_argument);
  CHECK_THROWS_AS(gen_lp_signal(100, 0.5, r3), std::invalid_argument);
}

TEST_CASE("gen_mask") {
  RandomStream r(2, 0);
  CHECK(gen_mask(Shape::vector(1000), 0.0, r).kept_count() == 1000);
  const Index n = 600000;
  RandomStream r2(3, 0);
  const MaskOperator m = gen_mask(Shape::vector(n), 1.0 / 3.0, r2);
  const double p = 2.0 / 3.0;
  const double sigma = std::sqrt(p * (1 - p) / n);
  CHECK(std::abs(static_cast<double>(m.kept_count()) / n - p) < 3 * sigma);
  RandomStream r3(3, 0);
  CHECK((gen_mask(Shape::vector(n), 1.0 / 3.0, r3).keep() == m.keep()).all());
  const MaskOperator img = gen_mask(Shape::image(16, 16), 0.5, r);
  CHECK(img.shape() == Shape::image(16, 16));
}

TEST_CASE("gen_sparse_signal: exact sparsity and basis mapping") {
  for (SparseDomain dom : {SparseDomain::dft, SparseDomain::identity}) {
    for (Index n : {64, 65, 1000}) {
      RandomStream r(4, static_cast<uint64_t>(n));
      const SparseSignal s = gen_sparse_signal(SparseSpec{n, 0.1, 0.0, dom, false}, r);
      Index nnz = 0;
      for (Index i = 0; i < n; ++i) nnz += s.coefficients[i] != 0.0;
      CHECK(nnz == static_cast<Index>(s.support.size()));
      CHECK(std::is_sorted(s.support.begin(), s.support.end()));
      for (Index i : s.support) CHECK(s.coefficients[i] != 0.0);
      if (dom == SparseDomain::dft) {
        CHECK(s.max_imag < 1e-12);
        CHECK((real_fourier_basis(n) * s.coefficients - s.signal).cwiseAbs().maxCoeff() < 1e-12);
      } else {
        CHECK(s.signal == s.coefficients);
      }
    }
  }
}

TEST_CASE("gen_sparse_signal: support size is binomial") {
  const int seeds = 60;
  const Index n = 1000;
  const double p = 0.05;
  double mean_id = 0.0, mean_bins = 0.0;
  for (int sd = 0; sd < seeds; ++sd) {
    RandomStream r(100 + static_cast<uint64_t>(sd), 0);
    const SparseSignal s = gen_sparse_signal(SparseSpec{n, p, 0.0, SparseDomain::identity, false}, r);
    const double sigma = std::sqrt(n * p * (1 - p));
    CHECK(std::abs(static_cast<double>(s.support.size()) - n * p) < 4 * sigma);
    mean_id += static_cast<double>(s.support.size()) / seeds;
    RandomStream r2(100 + static_cast<uint64_t>(sd), 1);
    const SparseSignal f = gen_sparse_signal(SparseSpec{n, p, 0.0, SparseDomain::dft, false}, r2);
    // DC and Nyquist contribute one coefficient, the other bins two.
    std::set<Index> bins;
    for (Index i : f.support) bins.insert(i == 0 ? 0 : (i == n - 1 ? n / 2 : (i + 1) / 2));
    mean_bins += static_cast<double>(bins.size()) / seeds;
  }
  CHECK(std::abs(mean_id - n * p) < 3 * std::sqrt(n * p * (1 - p) / seeds));
  const double nb = n / 2 + 1;
  CHECK(std::abs(mean_bins - nb * p) < 3 * std::sqrt(nb * p * (1 - p) / seeds));
  // Fixed support draws exactly round(p * candidates).
  RandomStream r(5, 0);
  CHECK(gen_sparse_signal(SparseSpec{n, p, 0.0, SparseDomain::identity, true}, r).support.size() == 50);
  // sigma_off fills every other position.
  const SparseSignal dense = gen_sparse_signal(SparseSpec{n, p, 0.01, SparseDomain::identity, false}, r);
  CHECK((dense.coefficients.array() != 0.0).count() == n);
}

TEST_CASE("real_fourier_basis is orthonormal") {
  for (Index n : {1, 2, 7, 16}) {
    const Matrix F = real_fourier_basis(n);
    CHECK((F.transpose() * F - Matrix::Identity(n, n)).cwiseAbs().maxCoeff() < 1e-12);
  }
}

TEST_CASE("gen_gaussian_matrix") {
  RandomStream r(6, 0);
  const Matrix A = gen_gaussian_matrix(500, 40, r);
  // |a_j|^2 ~ chi2(500)/500 with standard deviation sqrt(2/500).
  for (Index j = 0; j < A.cols(); ++j) {
    CHECK(std::abs(A.col(j).squaredNorm() - 1.0) < 5 * std::sqrt(2.0 / 500));
  }
  RandomStream r1(6, 0);
  CHECK(gen_gaussian_matrix(500, 40, r1) == A);
  RandomStream r2(6, 1);
  const Matrix S = gen_gaussian_matrix(30, 30, r2);
  Eigen::JacobiSVD<Matrix> svd(S);
  const double cond = svd.singularValues()(0) / svd.singularValues()(29);
  CHECK(std::isfinite(cond));
  CHECK(cond < 1e8);
  // Row-major draw order: the first row comes from the first 40 normals.
  RandomStream r3(6, 0);
  for (Index j = 0; j < 40; ++j) CHECK(A(0, j) == doctest::Approx(r3.normal() / std::sqrt(500.0)).epsilon(1e-14));
}

TEST_CASE("PGM round trip, encodings and errors") {
  RandomStream r(8, 0);
  Image img(13, 17);
  for (Index i = 0; i < img.size(); ++i) img.data()[i] = static_cast<double>(r.next_u32() % 256);
  const auto path = temp_path("roundtrip.pgm");
  save_pgm(img, path);
  CHECK(load_pgm(path) == img);
  std::filesystem::remove(path);

  const auto p5 = encode_pgm(img, PgmEncoding::binary);
  const auto p2 = encode_pgm(img, PgmEncoding::ascii);
  CHECK(p5[1] == '5');
  CHECK(p2[1] == '2');
  CHECK(parse_pgm(p5) == parse_pgm(p2));

  std::vector<unsigned char> cut(p5.begin(), p5.end() - 10);
  try {
    parse_pgm(cut);
    CHECK_MESSAGE(false, "truncated file parsed");
  } catch (const PgmError& e) {
    CHECK(e.offset() > 0);
    CHECK(e.offset() <= cut.size());
    CHECK(std::string(e.what()).find("byte") != std::string::npos);
  }
  const std::string bad_magic = "P6\n2 2\n255\nabcd";
  CHECK_THROWS_AS(parse_pgm({bad_magic.begin(), bad_magic.end()}), PgmError);
  const std::string over = "P2\n2 1\n255\n12 300\n";
  CHECK_THROWS_AS(parse_pgm({over.begin(), over.end()}), PgmError);
  const std::string commented = "P2\n# a comment\n2 1\n# another\n255\n12 30\n";
  const Image c = parse_pgm({commented.begin(), commented.end()});
  CHECK(c(0, 0) == 12);
  CHECK(c(0, 1) == 30);
  Image out_of_range = img;
  out_of_range(0, 0) = 256;
  CHECK_THROWS_AS(encode_pgm(out_of_range), std::invalid_argument);
  CHECK_THROWS(load_pgm(temp_path("does_not_exist.pgm")));
}

TEST_CASE("gen_texture_image") {
  RandomStream a(7, 0), b(7, 0);
  const Image t = gen_texture_image(64, 80, a);
  CHECK(t == gen_texture_image(64, 80, b));
  CHECK(t.rows() == 64);
  CHECK(t.cols() == 80);
  CHECK(t.minCoeff() >= 0.0);
  CHECK(t.maxCoeff() <= 255.0);
  CHECK((t.array() == t.array().round()).all());
  const double mean = t.mean();
  CHECK((t.array() - mean).square().mean() > 100.0);
}
