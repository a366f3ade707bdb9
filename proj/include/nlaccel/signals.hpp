#pragma once

// Deterministic synthesis of test data: band-limited signals, loss masks,
// sparse signals, measurement matrices, procedural images, and PGM I/O.

#include <array>
#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

#include "nlaccel/operators.hpp"
#include "nlaccel/types.hpp"

namespace nlaccel {

/// Philox4x32-10 block function; exposed for known-answer tests.
std::array<uint32_t, 4> philox4x32_10(std::array<uint32_t, 4> counter, std::array<uint32_t, 2> key);

/// Counter-based random stream. Stream `index` of a seed never overlaps any
/// other index because the index occupies the upper counter words.
class RandomStream {
 public:
  explicit RandomStream(uint64_t seed, uint64_t index = 0);

  uint32_t next_u32();
  /// Uniform in [0, 1) with 53 random bits.
  double uniform();
  /// Standard normal (Box-Muller).
  double normal();
  double normal(double mean, double stddev) { return mean + stddev * normal(); }

  uint64_t seed() const { return seed_; }
  uint64_t index() const { return index_; }

 private:
  void refill();

  uint64_t seed_;
  uint64_t index_;
  uint64_t block_ = 0;
  std::array<uint32_t, 4> buffer_{};
  int used_ = 4;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

/// floor(L / (2 * osr))
Index bandwidth_for_osr(Index length, double osr);

/// White normal noise low-pass filtered to B = floor(L/(2 osr)), scaled to unit RMS.
/// Throws std::invalid_argument when B == 0 or osr < 1.
Vector gen_lp_signal(Index length, double osr, RandomStream& rng);

/// Each sample is missing independently with probability loss_rate.
MaskOperator gen_mask(Shape shape, double loss_rate, RandomStream& rng);

enum class SparseDomain { dft, identity };

struct SparseSpec {
  Index length = 0;
  double p_nz = 0.05;
  double sigma_off = 0.0;
  SparseDomain domain = SparseDomain::dft;
  // Exactly round(p_nz * candidates) nonzeros instead of Bernoulli draws.
  bool fixed_support = false;
};

struct SparseSignal {
  // Coefficients in the real orthonormal Fourier basis (dft) or the samples (identity).
  Vector coefficients;
  // Time-domain signal.
  Vector signal;
  // Indices of coefficients drawn as nonzero, ascending.
  std::vector<Index> support;
  // Largest |imag| of the complex inverse DFT of the conjugate-symmetric spectrum.
  double max_imag = 0.0;
};

SparseSignal gen_sparse_signal(const SparseSpec& spec, RandomStream& rng);

/// i.i.d. N(0, 1/m) entries, drawn in row-major order.
Matrix gen_gaussian_matrix(Index m, Index n, RandomStream& rng);

/// Orthonormal real Fourier basis as columns: DC, then sqrt(2/N)cos and
/// sqrt(2/N)sin for k = 1..ceil(N/2)-1, then the Nyquist column for even N.
Matrix real_fourier_basis(Index n);

/// Procedural 8-bit texture: multi-octave value noise plus hard-edged shapes.
Image gen_texture_image(Index height, Index width, RandomStream& rng);

// ---- PGM --------------------------------------------------------------------

class PgmError : public std::runtime_error {
 public:
  PgmError(const std::string& what, size_t offset)
      : std::runtime_error(what + " (at byte " + std::to_string(offset) + ")"), offset_(offset) {}
  size_t offset() const { return offset_; }

 private:
  size_t offset_;
};

enum class PgmEncoding { binary, ascii };

Image parse_pgm(const std::vector<unsigned char>& bytes);
Image load_pgm(const std::filesystem::path& path);
/// Values must be integers in [0, 255] after rounding; throws std::invalid_argument otherwise.
std::vector<unsigned char> encode_pgm(const Image& img, PgmEncoding enc = PgmEncoding::binary);
void save_pgm(const Image& img, const std::filesystem::path& path,
              PgmEncoding enc = PgmEncoding::binary);

}  // namespace nlaccel
