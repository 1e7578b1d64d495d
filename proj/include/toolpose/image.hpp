#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

namespace toolpose {

// 8-bit interleaved image with 1 (gray) or 3 (RGB) channels.
struct Image {
  std::size_t height = 0;
  std::size_t width = 0;
  std::size_t channels = 3;
  std::vector<std::uint8_t> pixels;

  Image() = default;
  Image(std::size_t h, std::size_t w, std::size_t c = 3) : height(h), width(w), channels(c), pixels(h * w * c, 0) {}

  std::uint8_t& at(std::size_t row, std::size_t col, std::size_t ch) {
    return pixels[(row * width + col) * channels + ch];
  }
  std::uint8_t at(std::size_t row, std::size_t col, std::size_t ch) const {
    return pixels[(row * width + col) * channels + ch];
  }

  friend bool operator==(const Image&, const Image&) = default;
};

// Binary PGM (P5) for one channel, PPM (P6) for three; maxval 255.
void write_pnm(std::ostream& out, const Image& img);
Image read_pnm(std::istream& in, const std::string& source);

void write_pnm_file(const std::filesystem::path& path, const Image& img);
Image read_pnm_file(const std::filesystem::path& path);

}  // namespace toolpose
