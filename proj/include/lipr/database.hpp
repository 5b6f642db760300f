// lipr: inverted-index database of bag-of-words vectors.
//
// Queries touch only entries sharing at least one word with the probe (via the
// inverted index), filter by the temporal exclusion window, score with the L1
// similarity, and return descending matches above the threshold. Insertion
// happens after the query, one entry per scan, timestamps monotone.
#pragma once

#include <algorithm>
#include <cstring>
#include <fstream>
#include <limits>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

#include "lipr/bow.hpp"

namespace lipr {

struct QueryMatch {
  std::uint32_t entry_id = 0;
  double score = 0.0;
};

struct QueryResult {
  std::vector<QueryMatch> matches;  // descending by score

  bool empty() const { return matches.empty(); }
  const QueryMatch& best() const { return matches.front(); }
};

class BowDatabase {
 public:
  struct Entry {
    BowVector vec;
    double timestamp = 0.0;
    int scan_id = 0;
  };

  std::size_t size() const { return entries_.size(); }
  const Entry& entry(std::uint32_t id) const { return entries_[id]; }

  /// Postings examined by the most recent query (monotonicity checks).
  std::size_t last_postings_touched() const { return last_postings_touched_; }

  std::uint32_t insert(const BowVector& v, double timestamp, int scan_id) {
    if (!entries_.empty() && timestamp < entries_.back().timestamp)
      throw std::invalid_argument("BowDatabase::insert: non-monotone timestamp");
    const std::uint32_t id = static_cast<std::uint32_t>(entries_.size());
    entries_.push_back({v, timestamp, scan_id});
    for (const auto& [word, weight] : v.weights) index_[word].push_back({id, weight});
    return id;
  }

  /// Entries older than `now - exclusion` that share at least one word with
  /// `v` and score strictly above `lambda_bow`, best first, at most
  /// `max_results`.
  QueryResult query(const BowVector& v, double now, double exclusion, double lambda_bow,
                    std::size_t max_results = 1) const {
    QueryResult res;
    last_postings_touched_ = 0;
    if (v.empty() || entries_.empty() || max_results == 0) return res;

    std::vector<std::uint32_t> candidates;
    for (const auto& [word, weight] : v.weights) {
      const auto it = index_.find(word);
      if (it == index_.end()) continue;
      for (const auto& [entry_id, w] : it->second) {
        ++last_postings_touched_;
        candidates.push_back(entry_id);
      }
    }
    std::sort(candidates.begin(), candidates.end());
    candidates.erase(std::unique(candidates.begin(), candidates.end()), candidates.end());

    const double cutoff = now - exclusion;
    for (const std::uint32_t id : candidates) {
      const Entry& e = entries_[id];
      if (e.timestamp > cutoff) continue;
      const double s = similarity(v, e.vec);
      if (s > lambda_bow) res.matches.push_back({id, s});
    }
    std::sort(res.matches.begin(), res.matches.end(), [](const QueryMatch& a, const QueryMatch& b) {
      if (a.score != b.score) return a.score > b.score;
      return a.entry_id < b.entry_id;
    });
    if (res.matches.size() > max_results) res.matches.resize(max_results);
    return res;
  }

  void save(const std::string& path) const {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write database: " + path);
    out.write(kMagic, 8);
    detail::put_u64(out, entries_.size());
    for (const Entry& e : entries_) {
      detail::put_f64(out, e.timestamp);
      detail::put_i32(out, e.scan_id);
      detail::put_u32(out, static_cast<std::uint32_t>(e.vec.weights.size()));
      for (const auto& [word, weight] : e.vec.weights) {
        detail::put_u32(out, word);
        detail::put_f64(out, weight);
      }
    }
    if (!out) throw std::runtime_error("short write: " + path);
  }

  static BowDatabase load(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open database: " + path);
    char magic[8];
    in.read(magic, 8);
    if (!in || std::memcmp(magic, kMagic, 8) != 0)
      throw std::runtime_error(path + ": not a lipr database file");
    BowDatabase db;
    const std::uint64_t n = detail::get_u64(in);
    for (std::uint64_t i = 0; i < n; ++i) {
      Entry e;
      e.timestamp = detail::get_f64(in);
      e.scan_id = detail::get_i32(in);
      const std::uint32_t nw = detail::get_u32(in);
      e.vec.weights.reserve(nw);
      for (std::uint32_t w = 0; w < nw; ++w) {
        const std::uint32_t word = detail::get_u32(in);
        e.vec.weights.emplace_back(word, detail::get_f64(in));  // stored sorted
      }
      if (!in) throw std::runtime_error(path + ": truncated database file");
      const std::uint32_t id = static_cast<std::uint32_t>(db.entries_.size());
      for (const auto& [word, weight] : e.vec.weights) db.index_[word].push_back({id, weight});
      db.entries_.push_back(std::move(e));
    }
    return db;
  }

 private:
  static constexpr char kMagic[8] = {'L', 'P', 'R', 'D', 'B', '0', '0', '1'};

  std::vector<Entry> entries_;
  std::unordered_map<std::uint32_t, std::vector<std::pair<std::uint32_t, double>>> index_;
  mutable std::size_t last_postings_touched_ = 0;
};

}  // namespace lipr
