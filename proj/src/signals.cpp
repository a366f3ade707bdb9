#include "nlaccel/signals.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>

#include "nlaccel/fft.hpp"

namespace nlaccel {

namespace {

constexpr uint32_t kPhiloxM0 = 0xD2511F53u;
constexpr uint32_t kPhiloxM1 = 0xCD9E8D57u;
constexpr uint32_t kPhiloxW0 = 0x9E3779B9u;
constexpr uint32_t kPhiloxW1 = 0xBB67AE85u;

inline void mulhilo(uint32_t a, uint32_t b, uint32_t& hi, uint32_t& lo) {
  const uint64_t p = static_cast<uint64_t>(a) * b;
  hi = static_cast<uint32_t>(p >> 32);
  lo = static_cast<uint32_t>(p);
}

}  // namespace

std::array<uint32_t, 4> philox4x32_10(std::array<uint32_t, 4> c, std::array<uint32_t, 2> k) {
  for (int round = 0; round < 10; ++round) {
    if (round > 0) {
      k[0] += kPhiloxW0;
      k[1] += kPhiloxW1;
    }
    uint32_t hi0, lo0, hi1, lo1;
    mulhilo(kPhiloxM0, c[0], hi0, lo0);
    mulhilo(kPhiloxM1, c[2], hi1, lo1);
    c = {hi1 ^ c[1] ^ k[0], lo1, hi0 ^ c[3] ^ k[1], lo0};
  }
  return c;
}

RandomStream::RandomStream(uint64_t seed, uint64_t index) : seed_(seed), index_(index) {}

void RandomStream::refill() {
  const std::array<uint32_t, 4> ctr{static_cast<uint32_t>(block_),
                                    static_cast<uint32_t>(block_ >> 32),
                                    static_cast<uint32_t>(index_),
                                    static_cast<uint32_t>(index_ >> 32)};
  const std::array<uint32_t, 2> key{static_cast<uint32_t>(seed_),
                                    static_cast<uint32_t>(seed_ >> 32)};
  buffer_ = philox4x32_10(ctr, key);
  ++block_;
  used_ = 0;
}

uint32_t RandomStream::next_u32() {
  if (used_ >= 4) refill();
  return buffer_[static_cast<size_t>(used_++)];
}

double RandomStream::uniform() {
  const uint64_t hi = next_u32();
  const uint64_t lo = next_u32();
  return static_cast<double>(((hi << 32) | lo) >> 11) * 0x1.0p-53;
}

double RandomStream::normal() {
  if (has_spare_) {
    has_spare_ = false;
    return spare_;
  }
  const double u1 = 1.0 - uniform();  // (0, 1]
  const double u2 = uniform();
  const double r = std::sqrt(-2.0 * std::log(u1));
  const double theta = 2.0 * std::numbers::pi * u2;
  spare_ = r * std::sin(theta);
  has_spare_ = true;
  return r * std::cos(theta);
}

Index bandwidth_for_osr(Index length, double osr) {
  if (!(osr >= 1.0)) throw std::invalid_argument("OSR must be >= 1");
  return static_cast<Index>(std::floor(static_cast<double>(length) / (2.0 * osr)));
}

Vector gen_lp_signal(Index length, double osr, RandomStream& rng) {
  if (length < 1) throw std::invalid_argument("gen_lp_signal: length must be >= 1");
  const Index band = bandwidth_for_osr(length, osr);
  if (band == 0) throw std::invalid_argument("gen_lp_signal: bandwidth floor(L/(2 OSR)) is zero");
  Vector noise(length);
  for (Index i = 0; i < length; ++i) noise[i] = rng.normal();
  Vector x = LowPassDFTFilter(length, band).apply(noise);
  const double rms = std::sqrt(x.squaredNorm() / static_cast<double>(length));
  return x / rms;
}

MaskOperator gen_mask(Shape shape, double loss_rate, RandomStream& rng) {
  if (!(loss_rate >= 0.0 && loss_rate < 1.0)) {
    throw std::invalid_argument("gen_mask: loss rate must lie in [0, 1)");
  }
  MaskVector keep(shape.size());
  for (Index i = 0; i < keep.size(); ++i) keep[i] = rng.uniform() >= loss_rate;
  return MaskOperator(std::move(keep), shape);
}

namespace {

// Indices (into `candidates` slots) selected as nonzero.
std::vector<bool> draw_support(Index candidates, const SparseSpec& spec, RandomStream& rng) {
  std::vector<bool> on(static_cast<size_t>(candidates), false);
  if (!spec.fixed_support) {
    for (Index i = 0; i < candidates; ++i) on[static_cast<size_t>(i)] = rng.uniform() < spec.p_nz;
    return on;
  }
  const Index count = static_cast<Index>(std::llround(spec.p_nz * static_cast<double>(candidates)));
  std::vector<Index> perm(static_cast<size_t>(candidates));
  for (Index i = 0; i < candidates; ++i) perm[static_cast<size_t>(i)] = i;
  for (Index i = 0; i < count; ++i) {
    const Index j = i + static_cast<Index>(rng.uniform() * static_cast<double>(candidates - i));
    std::swap(perm[static_cast<size_t>(i)], perm[static_cast<size_t>(j)]);
    on[static_cast<size_t>(perm[static_cast<size_t>(i)])] = true;
  }
  return on;
}

}  // namespace

SparseSignal gen_sparse_signal(const SparseSpec& spec, RandomStream& rng) {
  const Index n = spec.length;
  if (n < 2) throw std::invalid_argument("gen_sparse_signal: length must be >= 2");
  if (!(spec.p_nz > 0.0 && spec.p_nz < 1.0)) {
    throw std::invalid_argument("gen_sparse_signal: p_nz must lie in (0, 1)");
  }
  if (!(spec.sigma_off >= 0.0)) throw std::invalid_argument("gen_sparse_signal: sigma_off < 0");

  SparseSignal out;
  out.coefficients = Vector::Zero(n);
  if (spec.domain == SparseDomain::identity) {
    const auto on = draw_support(n, spec, rng);
    for (Index i = 0; i < n; ++i) {
      if (on[static_cast<size_t>(i)]) {
        out.coefficients[i] = rng.normal();
        out.support.push_back(i);
      } else {
        out.coefficients[i] = spec.sigma_off * rng.normal();
      }
    }
    out.signal = out.coefficients;
    return out;
  }

  // One decision per frequency bin 0..N/2, so conjugate partners share it.
  const Index bins = n / 2 + 1;
  const auto on = draw_support(bins, spec, rng);
  Eigen::VectorXcd spectrum = Eigen::VectorXcd::Zero(n);
  for (Index k = 0; k < bins; ++k) {
    const bool nz = on[static_cast<size_t>(k)];
    const double sd = nz ? 1.0 : spec.sigma_off;
    const bool real_bin = k == 0 || (n % 2 == 0 && k == n / 2);
    if (real_bin) {
      const Index idx = k == 0 ? 0 : n - 1;
      out.coefficients[idx] = sd * rng.normal();
      if (nz) out.support.push_back(idx);
      spectrum[k] = out.coefficients[idx];
    } else {
      const double c = sd * rng.normal();
      const double s = sd * rng.normal();
      out.coefficients[2 * k - 1] = c;
      out.coefficients[2 * k] = s;
      if (nz) {
        out.support.push_back(2 * k - 1);
        out.support.push_back(2 * k);
      }
      const std::complex<double> X(c / std::numbers::sqrt2, -s / std::numbers::sqrt2);
      spectrum[k] = X;
      spectrum[n - k] = std::conj(X);
    }
  }
  std::sort(out.support.begin(), out.support.end());
  const Eigen::VectorXcd time = fft::inverse_complex(spectrum);
  out.signal = time.real();
  out.max_imag = time.imag().cwiseAbs().maxCoeff();
  return out;
}

Matrix gen_gaussian_matrix(Index m, Index n, RandomStream& rng) {
  if (m < 1 || n < 1) throw std::invalid_argument("gen_gaussian_matrix: dimensions must be >= 1");
  Matrix A(m, n);
  const double scale = 1.0 / std::sqrt(static_cast<double>(m));
  for (Index i = 0; i < m; ++i) {
    for (Index j = 0; j < n; ++j) A(i, j) = scale * rng.normal();
  }
  return A;
}

Matrix real_fourier_basis(Index n) {
  if (n < 1) throw std::invalid_argument("real_fourier_basis: n must be >= 1");
  Matrix psi(n, n);
  const double dn = static_cast<double>(n);
  psi.col(0).setConstant(1.0 / std::sqrt(dn));
  const double amp = std::sqrt(2.0 / dn);
  for (Index k = 1; 2 * k < n; ++k) {
    for (Index t = 0; t < n; ++t) {
      const double theta = 2.0 * std::numbers::pi * static_cast<double>(k * t % n) / dn;
      psi(t, 2 * k - 1) = amp * std::cos(theta);
      psi(t, 2 * k) = amp * std::sin(theta);
    }
  }
  if (n % 2 == 0) {
    for (Index t = 0; t < n; ++t) psi(t, n - 1) = (t % 2 == 0 ? 1.0 : -1.0) / std::sqrt(dn);
  }
  return psi;
}

namespace {

double smoothstep(double t) { return t * t * (3.0 - 2.0 * t); }

}  // namespace

Image gen_texture_image(Index height, Index width, RandomStream& rng) {
  if (height < 1 || width < 1) throw std::invalid_argument("gen_texture_image: empty size");
  Image img = Image::Zero(height, width);

  // Value noise, coarse to fine.
  double cell = static_cast<double>(std::max(height, width)) / 4.0;
  double amplitude = 1.0;
  for (int octave = 0; octave < 5 && cell >= 1.0; ++octave) {
    const Index gh = static_cast<Index>(std::ceil(static_cast<double>(height) / cell)) + 2;
    const Index gw = static_cast<Index>(std::ceil(static_cast<double>(width) / cell)) + 2;
    Matrix lattice(gh, gw);
    for (Index i = 0; i < gh; ++i) {
      for (Index j = 0; j < gw; ++j) lattice(i, j) = rng.uniform();
    }
    for (Index r = 0; r < height; ++r) {
      const double fy = static_cast<double>(r) / cell;
      const Index y0 = static_cast<Index>(fy);
      const double ty = smoothstep(fy - static_cast<double>(y0));
      for (Index c = 0; c < width; ++c) {
        const double fx = static_cast<double>(c) / cell;
        const Index x0 = static_cast<Index>(fx);
        const double tx = smoothstep(fx - static_cast<double>(x0));
        const double top = lattice(y0, x0) * (1 - tx) + lattice(y0, x0 + 1) * tx;
        const double bot = lattice(y0 + 1, x0) * (1 - tx) + lattice(y0 + 1, x0 + 1) * tx;
        img(r, c) += amplitude * (top * (1 - ty) + bot * ty);
      }
    }
    cell /= 2.0;
    amplitude *= 0.5;
  }

  // Hard-edged rectangles and discs.
  const double h = static_cast<double>(height);
  const double w = static_cast<double>(width);
  for (int s = 0; s < 8; ++s) {
    const bool disc = rng.uniform() < 0.5;
    const double cy = rng.uniform() * h;
    const double cx = rng.uniform() * w;
    const double ry = (0.05 + 0.15 * rng.uniform()) * h;
    const double rx = (0.05 + 0.15 * rng.uniform()) * w;
    const double offset = 1.6 * rng.uniform() - 0.8;
    for (Index r = 0; r < height; ++r) {
      const double dy = (static_cast<double>(r) - cy) / ry;
      for (Index c = 0; c < width; ++c) {
        const double dx = (static_cast<double>(c) - cx) / rx;
        const bool inside = disc ? dx * dx + dy * dy <= 1.0 : std::abs(dx) <= 1.0 && std::abs(dy) <= 1.0;
        if (inside) img(r, c) += offset;
      }
    }
  }

  const double lo = img.minCoeff();
  const double hi = img.maxCoeff();
  const double span = hi > lo ? hi - lo : 1.0;
  return ((img.array() - lo) * (255.0 / span)).round().matrix();
}

}  // namespace nlaccel
