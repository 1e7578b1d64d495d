#include "toolpose/image.hpp"

#include <cctype>
#include <fstream>
#include <istream>
#include <ostream>

#include "toolpose/error.hpp"

namespace toolpose {

namespace {

class HeaderReader {
 public:
  HeaderReader(std::istream& in, const std::string& source) : in_(in), source_(source) {}

  [[noreturn]] void fail(const std::string& what) const { throw FormatError(source_, offset_, what); }

  int get() {
    const int c = in_.get();
    if (c != std::char_traits<char>::eof()) ++offset_;
    return c;
  }

  // Skips whitespace and '#' comments, then reads a decimal integer. Consumes
  // exactly one whitespace character after the number.
  std::size_t number(const char* what) {
    int c = get();
    while (true) {
      if (c == '#') {
        while (c != '\n' && c != std::char_traits<char>::eof()) c = get();
      } else if (c != std::char_traits<char>::eof() && std::isspace(c)) {
        c = get();
      } else {
        break;
      }
    }
    if (c == std::char_traits<char>::eof() || !std::isdigit(c)) fail(std::string("expected ") + what);
    std::size_t v = 0;
    while (c != std::char_traits<char>::eof() && std::isdigit(c)) {
      v = v * 10 + static_cast<std::size_t>(c - '0');
      if (v > (std::size_t{1} << 31)) fail(std::string(what) + " too large");
      c = get();
    }
    if (c == std::char_traits<char>::eof() || !std::isspace(c)) {
      fail(std::string("expected whitespace after ") + what);
    }
    return v;
  }

  std::uint64_t offset() const { return offset_; }

 private:
  std::istream& in_;
  const std::string& source_;
  std::uint64_t offset_ = 0;
};

}  // namespace

void write_pnm(std::ostream& out, const Image& img) {
  if (img.channels != 1 && img.channels != 3) throw InvalidInput("PNM images need 1 or 3 channels");
  out << (img.channels == 1 ? "P5" : "P6") << '\n' << img.width << ' ' << img.height << "\n255\n";
  out.write(reinterpret_cast<const char*>(img.pixels.data()),
            static_cast<std::streamsize>(img.pixels.size()));
}

Image read_pnm(std::istream& in, const std::string& source) {
  HeaderReader r(in, source);
  const int m0 = r.get();
  const int m1 = r.get();
  if (m0 != 'P' || (m1 != '5' && m1 != '6')) throw FormatError(source, 0, "expected P5 or P6 magic");
  const std::size_t channels = m1 == '5' ? 1 : 3;
  const std::size_t w = r.number("width");
  const std::size_t h = r.number("height");
  const std::size_t maxval = r.number("maxval");
  if (w == 0 || h == 0) r.fail("image dimensions must be positive");
  if (maxval == 0 || maxval > 255) r.fail("only 8-bit images (maxval 1..255) are supported");
  Image img(h, w, channels);
  in.read(reinterpret_cast<char*>(img.pixels.data()), static_cast<std::streamsize>(img.pixels.size()));
  const auto got = static_cast<std::size_t>(in.gcount());
  if (got != img.pixels.size()) throw FormatError(source, r.offset() + got, "truncated pixel data");
  if (maxval != 255) {
    for (auto& p : img.pixels) {
      if (p > maxval) throw FormatError(source, r.offset(), "sample exceeds maxval");
      p = static_cast<std::uint8_t>((p * 255 + maxval / 2) / maxval);
    }
  }
  return img;
}

void write_pnm_file(const std::filesystem::path& path, const Image& img) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open '" + path.string() + "' for writing");
  write_pnm(out, img);
  if (!out) throw std::runtime_error("failed writing '" + path.string() + "'");
}

Image read_pnm_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError(path.string(), 0, "cannot open file");
  return read_pnm(in, path.string());
}

}  // namespace toolpose
