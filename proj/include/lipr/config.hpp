// lipr: detector configuration.
//
// Flat "key = value" text files, '#' comments. Unknown keys are rejected;
// missing keys take the defaults below.
#pragma once

#include <cstdint>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>

#include "lipr/scan_io.hpp"

namespace lipr {

struct Config {
  int width = 1024;
  int height = 128;
  double vfov_deg = 45.0;
  int pyramid_levels = 8;
  double pyramid_ratio = 1.2;
  int fast_threshold = 20;
  int n_bow = 2500;
  int n_s = 500;
  int n_m = 15;
  int n_p = 15;
  double lambda_bow = 0.015;
  int lambda_h_floor = 25;
  double inlier_px = 5.0;
  double exclusion_sec = 30.0;
  int max_results = 1;
  int ransac_max_iters = 200;
  std::uint64_t ransac_seed = 7;
  std::uint64_t brief_seed = 42;
  std::string vocab_path;

  void validate() const {
    const auto count_ge1 = [](int v, const char* key) {
      if (v < 1) throw std::invalid_argument(std::string("config: ") + key + " must be >= 1");
    };
    count_ge1(width, "width");
    count_ge1(height, "height");
    count_ge1(pyramid_levels, "pyramid_levels");
    count_ge1(fast_threshold, "fast_threshold");
    count_ge1(n_bow, "n_bow");
    count_ge1(n_s, "n_s");
    count_ge1(n_m, "n_m");
    count_ge1(n_p, "n_p");
    count_ge1(lambda_h_floor, "lambda_h_floor");
    count_ge1(max_results, "max_results");
    count_ge1(ransac_max_iters, "ransac_max_iters");
    if (!(vfov_deg > 0.0)) throw std::invalid_argument("config: vfov_deg must be > 0");
    if (!(pyramid_ratio > 1.0)) throw std::invalid_argument("config: pyramid_ratio must be > 1");
    if (!(lambda_bow > 0.0 && lambda_bow < 1.0))
      throw std::invalid_argument("config: lambda_bow must be in (0, 1)");
    if (!(inlier_px > 0.0)) throw std::invalid_argument("config: inlier_px must be > 0");
    if (exclusion_sec < 0.0) throw std::invalid_argument("config: exclusion_sec must be >= 0");
  }
};

inline Config parse_config(std::istream& in, const std::string& name = "<config>") {
  Config cfg;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::size_t hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    const std::string t = detail::trim(line);
    if (t.empty()) continue;
    const std::size_t eq = t.find('=');
    if (eq == std::string::npos)
      throw std::runtime_error(name + ":" + std::to_string(line_no) + ": expected key = value");
    const std::string key = detail::trim(t.substr(0, eq));
    const std::string value = detail::trim(t.substr(eq + 1));
    const std::string where = name + ":" + std::to_string(line_no);

    const auto as_int = [&] { return static_cast<int>(detail::parse_double(value, where)); };
    const auto as_u64 = [&] {
      return static_cast<std::uint64_t>(detail::parse_double(value, where));
    };
    if (key == "width") cfg.width = as_int();
    else if (key == "height") cfg.height = as_int();
    else if (key == "vfov_deg") cfg.vfov_deg = detail::parse_double(value, where);
    else if (key == "pyramid_levels") cfg.pyramid_levels = as_int();
    else if (key == "pyramid_ratio") cfg.pyramid_ratio = detail::parse_double(value, where);
    else if (key == "fast_threshold") cfg.fast_threshold = as_int();
    else if (key == "n_bow") cfg.n_bow = as_int();
    else if (key == "n_s") cfg.n_s = as_int();
    else if (key == "n_m") cfg.n_m = as_int();
    else if (key == "n_p") cfg.n_p = as_int();
    else if (key == "lambda_bow") cfg.lambda_bow = detail::parse_double(value, where);
    else if (key == "lambda_h_floor") cfg.lambda_h_floor = as_int();
    else if (key == "inlier_px") cfg.inlier_px = detail::parse_double(value, where);
    else if (key == "exclusion_sec") cfg.exclusion_sec = detail::parse_double(value, where);
    else if (key == "max_results") cfg.max_results = as_int();
    else if (key == "ransac_max_iters") cfg.ransac_max_iters = as_int();
    else if (key == "ransac_seed") cfg.ransac_seed = as_u64();
    else if (key == "brief_seed") cfg.brief_seed = as_u64();
    else if (key == "vocab_path") cfg.vocab_path = value;
    else
      throw std::runtime_error(where + ": unknown key '" + key + "'");
  }
  cfg.validate();
  return cfg;
}

inline Config load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config: " + path);
  return parse_config(in, path);
}

}  // namespace lipr
