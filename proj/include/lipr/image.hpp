// lipr: 8-bit grayscale image grid.
#pragma once

#include <cstdint>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace lipr {

/// Row-major 8-bit image. Columns may wrap (cylindrical azimuth axis);
/// sampling helpers below take that into account, rows never wrap.
struct Image8 {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> pixels;

  Image8() = default;
  Image8(int w, int h, std::uint8_t fill = 0)
      : width(w), height(h), pixels(static_cast<std::size_t>(w) * h, fill) {}

  std::uint8_t at(int x, int y) const {
    return pixels[static_cast<std::size_t>(y) * width + x];
  }
  std::uint8_t& at(int x, int y) { return pixels[static_cast<std::size_t>(y) * width + x]; }

  /// Column-wrapped access; y must be in bounds.
  std::uint8_t at_wrapped(int x, int y) const {
    if (static_cast<unsigned>(x) >= static_cast<unsigned>(width)) {
      x %= width;
      if (x < 0) x += width;
    }
    return pixels[static_cast<std::size_t>(y) * width + x];
  }

  bool in_bounds(int x, int y) const { return x >= 0 && x < width && y >= 0 && y < height; }
};

inline int wrap_col(int x, int width) {
  if (static_cast<unsigned>(x) < static_cast<unsigned>(width)) return x;
  x %= width;
  return x < 0 ? x + width : x;
}

/// Binary PGM (P5) dump, exact pixel bytes.
inline void write_pgm(const Image8& img, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write PGM: " + path);
  out << "P5\n" << img.width << " " << img.height << "\n255\n";
  out.write(reinterpret_cast<const char*>(img.pixels.data()),
            static_cast<std::streamsize>(img.pixels.size()));
}

}  // namespace lipr
