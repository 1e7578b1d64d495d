#include "toolpose/hmap_io.hpp"

#include <array>
#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>

#include "toolpose/error.hpp"

namespace toolpose {

namespace {

constexpr std::size_t kMagicLen = sizeof(kHmapMagic) - 1;
// Guards against absurd headers before allocating.
constexpr std::uint64_t kMaxElements = std::uint64_t{1} << 32;
constexpr std::size_t kMaxNameLen = 4096;

void put_u32(std::ostream& out, std::uint32_t v) {
  const std::array<char, 4> b{static_cast<char>(v & 0xff), static_cast<char>((v >> 8) & 0xff),
                              static_cast<char>((v >> 16) & 0xff),
                              static_cast<char>((v >> 24) & 0xff)};
  out.write(b.data(), 4);
}

class Reader {
 public:
  Reader(std::istream& in, const std::string& source) : in_(in), source_(source) {}

  [[noreturn]] void fail(const std::string& what) const { throw FormatError(source_, offset_, what); }

  void read(char* dst, std::size_t n, const char* what) {
    in_.read(dst, static_cast<std::streamsize>(n));
    const auto got = static_cast<std::size_t>(in_.gcount());
    if (got != n) {
      offset_ += got;
      fail(std::string("truncated ") + what);
    }
    offset_ += n;
  }

  std::uint32_t u32(const char* what) {
    std::array<unsigned char, 4> b{};
    read(reinterpret_cast<char*>(b.data()), 4, what);
    return std::uint32_t{b[0]} | (std::uint32_t{b[1]} << 8) | (std::uint32_t{b[2]} << 16) |
           (std::uint32_t{b[3]} << 24);
  }

  std::string cstring() {
    std::string s;
    while (true) {
      char c;
      read(&c, 1, "channel name");
      if (c == '\0') return s;
      if (s.size() >= kMaxNameLen) fail("channel name too long");
      s.push_back(c);
    }
  }

  std::uint64_t offset() const { return offset_; }

 private:
  std::istream& in_;
  const std::string& source_;
  std::uint64_t offset_ = 0;
};

}  // namespace

void write_hmap(std::ostream& out, const Heatmap& map) {
  for (const auto& name : map.channel_names()) {
    if (name.find('\0') != std::string::npos) throw InvalidInput("channel name contains a NUL byte");
  }
  out.write(kHmapMagic, kMagicLen);
  put_u32(out, static_cast<std::uint32_t>(map.height()));
  put_u32(out, static_cast<std::uint32_t>(map.width()));
  put_u32(out, static_cast<std::uint32_t>(map.channels()));
  for (const auto& name : map.channel_names()) out.write(name.c_str(), static_cast<std::streamsize>(name.size() + 1));
  std::vector<char> buf(map.data().size() * 4);
  std::size_t i = 0;
  for (double v : map.data()) {
    const auto bits = std::bit_cast<std::uint32_t>(static_cast<float>(v));
    buf[i++] = static_cast<char>(bits & 0xff);
    buf[i++] = static_cast<char>((bits >> 8) & 0xff);
    buf[i++] = static_cast<char>((bits >> 16) & 0xff);
    buf[i++] = static_cast<char>((bits >> 24) & 0xff);
  }
  out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
}

Heatmap read_hmap(std::istream& in, const std::string& source) {
  Reader r(in, source);
  std::array<char, kMagicLen> magic{};
  r.read(magic.data(), kMagicLen, "magic");
  if (std::memcmp(magic.data(), kHmapMagic, kMagicLen) != 0) {
    throw FormatError(source, 0, "bad magic (expected HMAP1)");
  }
  const std::uint32_t h = r.u32("height");
  const std::uint32_t w = r.u32("width");
  const std::uint32_t c = r.u32("channel count");
  if (h < 2 || w < 2 || c < 1) r.fail("invalid dimensions (need H >= 2, W >= 2, C >= 1)");
  const std::uint64_t n = std::uint64_t{h} * w * c;
  if (n > kMaxElements) r.fail("dimensions too large");
  std::vector<std::string> names;
  names.reserve(c);
  for (std::uint32_t i = 0; i < c; ++i) names.push_back(r.cstring());

  std::vector<unsigned char> raw(static_cast<std::size_t>(n) * 4);
  r.read(reinterpret_cast<char*>(raw.data()), raw.size(), "payload");
  std::vector<double> data(static_cast<std::size_t>(n));
  for (std::size_t i = 0; i < data.size(); ++i) {
    const unsigned char* b = raw.data() + 4 * i;
    const std::uint32_t bits = std::uint32_t{b[0]} | (std::uint32_t{b[1]} << 8) |
                               (std::uint32_t{b[2]} << 16) | (std::uint32_t{b[3]} << 24);
    data[i] = static_cast<double>(std::bit_cast<float>(bits));
  }
  return Heatmap(h, w, c, std::move(data), std::move(names));
}

void write_hmap_file(const std::filesystem::path& path, const Heatmap& map) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open '" + path.string() + "' for writing");
  write_hmap(out, map);
  if (!out) throw std::runtime_error("failed writing '" + path.string() + "'");
}

Heatmap read_hmap_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError(path.string(), 0, "cannot open file");
  return read_hmap(in, path.string());
}

}  // namespace toolpose
