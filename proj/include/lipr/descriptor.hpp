// lipr: 256-bit binary descriptors and the BRIEF sampling pattern.
#pragma once

#include <array>
#include <bit>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>

#include "lipr/hash.hpp"

namespace lipr {

struct Descriptor256 {
  std::array<std::uint64_t, 4> words{};

  void set_bit(int k) { words[k >> 6] |= std::uint64_t{1} << (k & 63); }
  bool bit(int k) const { return (words[k >> 6] >> (k & 63)) & 1; }

  bool operator==(const Descriptor256&) const = default;
};

inline int hamming(const Descriptor256& a, const Descriptor256& b) {
  return std::popcount(a.words[0] ^ b.words[0]) + std::popcount(a.words[1] ^ b.words[1]) +
         std::popcount(a.words[2] ^ b.words[2]) + std::popcount(a.words[3] ^ b.words[3]);
}

/// 256 point-pair offsets inside the 31x31 descriptor patch, drawn once from a
/// seeded isotropic Gaussian (sigma = patch/5) truncated to the radius-15 disk.
/// Steering is discretized to 30 angle bins of 12 degrees; the rotated offsets
/// are tabulated up front. The same pattern must be used for extraction,
/// vocabulary training and querying; the seed is stored in vocabulary files.
struct BriefPattern {
  static constexpr int kPatchRadius = 15;
  static constexpr int kAngleBins = 30;

  std::uint64_t seed = 0;
  struct Pair {
    std::int8_t px, py, qx, qy;
  };
  std::array<Pair, 256> pairs{};
  std::array<std::array<Pair, 256>, kAngleBins> steered{};

  static BriefPattern generate(std::uint64_t seed) {
    BriefPattern pat;
    pat.seed = seed;
    std::mt19937_64 rng(splitmix64(seed ^ 0x42726965ULL));
    std::normal_distribution<double> gauss(0.0, 31.0 / 5.0);
    const auto draw = [&](std::int8_t& x, std::int8_t& y) {
      while (true) {
        const double fx = gauss(rng), fy = gauss(rng);
        const int ix = static_cast<int>(std::lround(fx));
        const int iy = static_cast<int>(std::lround(fy));
        if (ix * ix + iy * iy > kPatchRadius * kPatchRadius) continue;
        x = static_cast<std::int8_t>(ix);
        y = static_cast<std::int8_t>(iy);
        return;
      }
    };
    for (auto& pr : pat.pairs) {
      do {
        draw(pr.px, pr.py);
        draw(pr.qx, pr.qy);
      } while (pr.px == pr.qx && pr.py == pr.qy);
    }

    for (int b = 0; b < kAngleBins; ++b) {
      const double a = b * 2.0 * std::numbers::pi / kAngleBins;
      const double c = std::cos(a), s = std::sin(a);
      const auto rot = [&](std::int8_t x, std::int8_t y, std::int8_t& rx, std::int8_t& ry) {
        rx = static_cast<std::int8_t>(std::lround(c * x - s * y));
        ry = static_cast<std::int8_t>(std::lround(s * x + c * y));
      };
      for (int k = 0; k < 256; ++k) {
        rot(pat.pairs[k].px, pat.pairs[k].py, pat.steered[b][k].px, pat.steered[b][k].py);
        rot(pat.pairs[k].qx, pat.pairs[k].qy, pat.steered[b][k].qx, pat.steered[b][k].qy);
      }
    }
    return pat;
  }
};

}  // namespace lipr
