#include <cctype>
#include <cmath>
#include <fstream>
#include <iterator>
#include <sstream>

#include "nlaccel/signals.hpp"

namespace nlaccel {

namespace {

class HeaderReader {
 public:
  explicit HeaderReader(const std::vector<unsigned char>& b) : bytes_(b) {}

  void skip_space_and_comments() {
    while (pos_ < bytes_.size()) {
      const unsigned char c = bytes_[pos_];
      if (c == '#') {
        while (pos_ < bytes_.size() && bytes_[pos_] != '\n') ++pos_;
      } else if (std::isspace(c)) {
        ++pos_;
      } else {
        break;
      }
    }
  }

  long read_uint(const char* what) {
    skip_space_and_comments();
    if (pos_ >= bytes_.size()) throw PgmError(std::string("unexpected end of file reading ") + what, pos_);
    if (!std::isdigit(bytes_[pos_])) throw PgmError(std::string("expected ") + what, pos_);
    long v = 0;
    while (pos_ < bytes_.size() && std::isdigit(bytes_[pos_])) {
      v = v * 10 + (bytes_[pos_] - '0');
      if (v > 1'000'000'000L) throw PgmError(std::string(what) + " too large", pos_);
      ++pos_;
    }
    return v;
  }

  size_t pos() const { return pos_; }
  void advance(size_t n) { pos_ += n; }

 private:
  const std::vector<unsigned char>& bytes_;
  size_t pos_ = 0;
};

}  // namespace

Image parse_pgm(const std::vector<unsigned char>& bytes) {
  if (bytes.size() < 2) throw PgmError("truncated magic number", bytes.size());
  if (bytes[0] != 'P' || (bytes[1] != '2' && bytes[1] != '5')) {
    throw PgmError("not a P2/P5 PGM file", 0);
  }
  const bool binary = bytes[1] == '5';
  HeaderReader rd(bytes);
  rd.advance(2);
  const long width = rd.read_uint("width");
  const long height = rd.read_uint("height");
  const long maxval = rd.read_uint("maxval");
  if (width <= 0 || height <= 0) throw PgmError("image dimensions must be positive", rd.pos());
  if (maxval < 1 || maxval > 255) throw PgmError("maxval must lie in [1, 255]", rd.pos());

  Image img(height, width);
  const size_t count = static_cast<size_t>(width) * static_cast<size_t>(height);
  if (binary) {
    // Exactly one whitespace byte separates the header from the raster.
    if (rd.pos() >= bytes.size() || !std::isspace(bytes[rd.pos()])) {
      throw PgmError("missing whitespace after header", rd.pos());
    }
    const size_t start = rd.pos() + 1;
    if (bytes.size() < start + count) {
      throw PgmError("truncated raster: expected " + std::to_string(count) + " bytes", bytes.size());
    }
    for (size_t i = 0; i < count; ++i) {
      const unsigned v = bytes[start + i];
      if (v > static_cast<unsigned>(maxval)) throw PgmError("pixel value exceeds maxval", start + i);
      img.data()[i] = v;
    }
  } else {
    for (size_t i = 0; i < count; ++i) {
      const size_t at = rd.pos();
      const long v = rd.read_uint("pixel value");
      if (v > maxval) throw PgmError("pixel value exceeds maxval", at);
      img.data()[i] = static_cast<double>(v);
    }
  }
  return img;
}

Image load_pgm(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return parse_pgm(bytes);
}

std::vector<unsigned char> encode_pgm(const Image& img, PgmEncoding enc) {
  if (img.size() == 0) throw std::invalid_argument("encode_pgm: empty image");
  std::ostringstream header;
  header << (enc == PgmEncoding::binary ? "P5" : "P2") << '\n'
         << img.cols() << ' ' << img.rows() << '\n'
         << 255 << '\n';
  const std::string h = header.str();
  std::vector<unsigned char> out(h.begin(), h.end());
  for (Index i = 0; i < img.size(); ++i) {
    const double v = std::round(img.data()[i]);
    if (!std::isfinite(v) || v < 0.0 || v > 255.0) {
      throw std::invalid_argument("encode_pgm: pixel value outside [0, 255]");
    }
    const auto byte = static_cast<unsigned char>(v);
    if (enc == PgmEncoding::binary) {
      out.push_back(byte);
    } else {
      const std::string s = std::to_string(static_cast<int>(byte));
      out.insert(out.end(), s.begin(), s.end());
      out.push_back((i + 1) % img.cols() == 0 ? '\n' : ' ');
    }
  }
  return out;
}

void save_pgm(const Image& img, const std::filesystem::path& path, PgmEncoding enc) {
  const auto bytes = encode_pgm(img, enc);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw std::runtime_error("write failed for " + path.string());
}

}  // namespace nlaccel
