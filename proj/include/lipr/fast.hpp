// lipr: FAST-9 corner detection on cylindrical images.
//
// A pixel is a corner at threshold t iff its corner score exceeds t, where the
// score is the largest margin m such that some 9-long contiguous arc on the
// radius-3 circle of 16 pixels is entirely brighter than center+m or entirely
// darker than center-m. Columns wrap; rows within `border_y` of the top or
// bottom edge are excluded so descriptor patches fit.
#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "lipr/image.hpp"

namespace lipr {

/// Radius-3 Bresenham circle, clockwise from 12 o'clock (y grows downward).
inline constexpr std::array<std::array<int, 2>, 16> kFastCircle = {{{0, -3},
                                                                    {1, -3},
                                                                    {2, -2},
                                                                    {3, -1},
                                                                    {3, 0},
                                                                    {3, 1},
                                                                    {2, 2},
                                                                    {1, 3},
                                                                    {0, 3},
                                                                    {-1, 3},
                                                                    {-2, 2},
                                                                    {-3, 1},
                                                                    {-3, 0},
                                                                    {-3, -1},
                                                                    {-2, -2},
                                                                    {-1, -3}}};

struct FastKeypoint {
  int x = 0;
  int y = 0;
  int score = 0;
};

namespace detail {

/// True iff the 16-bit circular mask contains a run of >= 9 set bits.
inline bool has_arc9(std::uint32_t mask) {
  std::uint32_t m = mask | (mask << 16);
  m &= m >> 1;  // run >= 2
  m &= m >> 2;  // run >= 4
  m &= m >> 4;  // run >= 8
  m &= m >> 1;  // run >= 9
  return m != 0;
}

inline int fast_score_from_diffs(const int diff[16]) {
  int best = 0;
  for (int start = 0; start < 16; ++start) {
    int bright = 255, dark = 255;
    for (int k = 0; k < 9; ++k) {
      const int d = diff[(start + k) & 15];
      bright = std::min(bright, d);
      dark = std::min(dark, -d);
      if (bright <= best && dark <= best) break;
    }
    best = std::max({best, bright, dark});
  }
  return best;
}

/// Largest threshold at which (x, y) still passes the 9-contiguous segment
/// test; 0 when no arc passes at any positive margin.
inline int fast_score_at(const Image8& img, int x, int y) {
  const int c = img.at(x, y);
  int diff[16];
  for (int i = 0; i < 16; ++i)
    diff[i] = static_cast<int>(img.at_wrapped(x + kFastCircle[i][0], y + kFastCircle[i][1])) - c;
  return fast_score_from_diffs(diff);
}

}  // namespace detail

/// FAST-9 with 3x3 non-max suppression on the corner score. Keeps a pixel iff
/// its score is >= every neighbor's score (columns wrap, rows clamp).
inline std::vector<FastKeypoint> detect_fast(const Image8& img, int threshold,
                                             int border_y = 16) {
  std::vector<FastKeypoint> out;
  if (threshold < 1 || img.height <= 2 * border_y) return out;
  const int y0 = std::max(border_y, 3);
  const int y1 = img.height - 1 - std::max(border_y, 3);

  // score map of the candidate band (plus one guard row each side for NMS)
  const int band0 = y0 - 1;
  const int band1 = y1 + 1;
  std::vector<int> scores(static_cast<std::size_t>(img.width) * (band1 - band0 + 1), 0);
  const auto score_at = [&](int x, int y) -> int& {
    return scores[static_cast<std::size_t>(y - band0) * img.width + x];
  };

  // circle reads resolved to linear offsets on the interior fast path
  int off[16];
  for (int i = 0; i < 16; ++i) off[i] = kFastCircle[i][1] * img.width + kFastCircle[i][0];

  for (int y = band0; y <= band1; ++y) {
    if (y < 3 || y > img.height - 4) continue;
    const std::uint8_t* row = &img.pixels[static_cast<std::size_t>(y) * img.width];
    for (int x = 0; x < img.width; ++x) {
      const bool interior = x >= 3 && x < img.width - 3;
      const auto circle = [&](int i) -> int {
        if (interior) return row[x + off[i]];
        return img.at_wrapped(x + kFastCircle[i][0], y + kFastCircle[i][1]);
      };
      // quick reject on the four compass pixels: any 9-arc contains >= 2
      const int c = row[x];
      int nb = 0, nd = 0;
      for (int i = 0; i < 16; i += 4) {
        const int p = circle(i);
        if (p > c + threshold) ++nb;
        if (p < c - threshold) ++nd;
      }
      if (nb < 2 && nd < 2) continue;
      // exact 9-arc existence at the threshold, then the full score only for
      // pixels that are actually corners (the score feeds NMS)
      int diff[16];
      std::uint32_t bright = 0, dark = 0;
      for (int i = 0; i < 16; ++i) {
        diff[i] = circle(i) - c;
        if (diff[i] > threshold) bright |= 1u << i;
        if (-diff[i] > threshold) dark |= 1u << i;
      }
      if (!detail::has_arc9(bright) && !detail::has_arc9(dark)) continue;
      score_at(x, y) = detail::fast_score_from_diffs(diff);
    }
  }

  for (int y = y0; y <= y1; ++y) {
    for (int x = 0; x < img.width; ++x) {
      const int s = score_at(x, y);
      if (s == 0) continue;
      bool keep = true;
      for (int dy = -1; dy <= 1 && keep; ++dy) {
        for (int dx = -1; dx <= 1; ++dx) {
          if (dx == 0 && dy == 0) continue;
          if (score_at(wrap_col(x + dx, img.width), y + dy) > s) {
            keep = false;
            break;
          }
        }
      }
      if (keep) out.push_back({x, y, s});
    }
  }
  return out;
}

}  // namespace lipr
