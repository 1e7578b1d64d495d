#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>

#include "toolpose/heatmap.hpp"

namespace toolpose {

// HMAP1 layout: "HMAP1\n", u32 H, u32 W, u32 C (little-endian), C
// NUL-terminated channel names, then H*W*C little-endian float32 values in
// row-major channel-last order.
inline constexpr char kHmapMagic[] = "HMAP1\n";

void write_hmap(std::ostream& out, const Heatmap& map);
// Throws FormatError naming `source` and the failing byte offset.
Heatmap read_hmap(std::istream& in, const std::string& source);

void write_hmap_file(const std::filesystem::path& path, const Heatmap& map);
Heatmap read_hmap_file(const std::filesystem::path& path);

}  // namespace toolpose
