// lipr: image pyramid with cylindrical (column-wrapped) bilinear resampling.
#pragma once

#include <cmath>
#include <stdexcept>
#include <vector>

#include "lipr/image.hpp"

namespace lipr {

struct Pyramid {
  std::vector<Image8> levels;
  std::vector<double> scale_x;  // level -> level-0 column factor (w0 / wl)
  std::vector<double> scale_y;
  double ratio = 1.2;

  int num_levels() const { return static_cast<int>(levels.size()); }

  /// Center of level pixel x as a continuous level-0 coordinate, in the same
  /// frame the projection model uses (pixel k covers [k, k+1)).
  double to_level0_x(int level, int x) const { return (x + 0.5) * scale_x[level]; }
  double to_level0_y(int level, int y) const { return (y + 0.5) * scale_y[level]; }
};

namespace detail {

/// Bilinear resample to new_w x new_h; columns wrap, rows clamp.
inline Image8 resample(const Image8& src, int new_w, int new_h) {
  Image8 out(new_w, new_h);
  const double sx = static_cast<double>(src.width) / new_w;
  const double sy = static_cast<double>(src.height) / new_h;
  for (int y = 0; y < new_h; ++y) {
    const double fy = (y + 0.5) * sy - 0.5;
    int y0 = static_cast<int>(std::floor(fy));
    const double wy = fy - y0;
    int y1 = y0 + 1;
    y0 = std::clamp(y0, 0, src.height - 1);
    y1 = std::clamp(y1, 0, src.height - 1);
    for (int x = 0; x < new_w; ++x) {
      const double fx = (x + 0.5) * sx - 0.5;
      const int x0 = static_cast<int>(std::floor(fx));
      const double wx = fx - x0;
      const double a = src.at(wrap_col(x0, src.width), y0);
      const double b = src.at(wrap_col(x0 + 1, src.width), y0);
      const double c = src.at(wrap_col(x0, src.width), y1);
      const double d = src.at(wrap_col(x0 + 1, src.width), y1);
      const double v = (1.0 - wy) * ((1.0 - wx) * a + wx * b) + wy * ((1.0 - wx) * c + wx * d);
      out.at(x, y) = static_cast<std::uint8_t>(std::clamp(std::floor(v + 0.5), 0.0, 255.0));
    }
  }
  return out;
}

}  // namespace detail

/// Builds up to `levels` levels; level l has dims floor(dim0 / ratio^l), each
/// level resampled from the previous one. Stops early once a dimension would
/// drop below 16 and throws if fewer than `min_levels` fit.
inline Pyramid build_pyramid(const Image8& img, int levels = 8, double ratio = 1.2,
                             int min_levels = 2) {
  if (levels < 1) throw std::invalid_argument("build_pyramid: levels must be >= 1");
  if (!(ratio > 1.0)) throw std::invalid_argument("build_pyramid: ratio must be > 1");
  Pyramid pyr;
  pyr.ratio = ratio;
  double f = 1.0;
  for (int l = 0; l < levels; ++l) {
    if (l > 0) f *= ratio;
    const int w = static_cast<int>(std::floor(img.width / f));
    const int h = static_cast<int>(std::floor(img.height / f));
    if (w < 16 || h < 16) break;
    if (l == 0) {
      pyr.levels.push_back(img);
    } else {
      pyr.levels.push_back(detail::resample(pyr.levels.back(), w, h));
    }
    pyr.scale_x.push_back(static_cast<double>(img.width) / w);
    pyr.scale_y.push_back(static_cast<double>(img.height) / h);
  }
  if (pyr.num_levels() < min_levels)
    throw std::invalid_argument("build_pyramid: image too small for requested levels");
  return pyr;
}

}  // namespace lipr
