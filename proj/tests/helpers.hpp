// Shared test utilities: seeded images, descriptors, temp files.
#pragma once

#include <cstdio>
#include <filesystem>
#include <random>
#include <set>
#include <string>

#include "lipr/descriptor.hpp"
#include "lipr/image.hpp"

namespace test {

inline lipr::Image8 random_image(int w, int h, std::uint64_t seed, int lo = 0, int hi = 255) {
  std::mt19937_64 rng(lipr::splitmix64(seed));
  std::uniform_int_distribution<int> dist(lo, hi);
  lipr::Image8 img(w, h);
  for (auto& px : img.pixels) px = static_cast<std::uint8_t>(dist(rng));
  return img;
}

inline lipr::Descriptor256 random_descriptor(std::mt19937_64& rng) {
  lipr::Descriptor256 d;
  for (auto& w : d.words) w = rng();
  return d;
}

/// Flips exactly `n` distinct bits, so hamming(d, perturb(d, n)) == n.
inline lipr::Descriptor256 perturb(const lipr::Descriptor256& d, int n, std::mt19937_64& rng) {
  lipr::Descriptor256 out = d;
  std::uniform_int_distribution<int> bit(0, 255);
  std::set<int> chosen;
  while (static_cast<int>(chosen.size()) < n) chosen.insert(bit(rng));
  for (const int b : chosen) out.words[b >> 6] ^= std::uint64_t{1} << (b & 63);
  return out;
}

class TempDir {
 public:
  TempDir() {
    path_ = std::filesystem::temp_directory_path() /
            ("lipr_test_" + std::to_string(std::random_device{}()));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  std::string file(const std::string& name) const { return (path_ / name).string(); }
  std::string path() const { return path_.string(); }

 private:
  std::filesystem::path path_;
};

}  // namespace test
