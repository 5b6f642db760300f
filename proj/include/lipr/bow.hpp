// lipr: hierarchical binary vocabulary and bag-of-words vectors.
//
// The vocabulary is a k-ary tree of depth L built by recursive k-majority
// clustering (k-means++-style seeding under Hamming distance, bitwise majority
// vote updates). Leaves are words; word weights are idf over the training
// documents. Descriptors quantize by greedy nearest-child descent.
#pragma once

#include <cmath>
#include <cstring>
#include <fstream>
#include <map>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include "lipr/descriptor.hpp"
#include "lipr/orb.hpp"

namespace lipr {

/// Sparse L1-normalized word-weight vector, sorted by word id.
struct BowVector {
  std::vector<std::pair<std::uint32_t, double>> weights;

  bool empty() const { return weights.empty(); }

  static BowVector from_map(const std::map<std::uint32_t, double>& m) {
    BowVector v;
    v.weights.assign(m.begin(), m.end());
    return v;
  }

  void l1_normalize() {
    double sum = 0.0;
    for (const auto& [w, v] : weights) sum += v;
    if (sum <= 0.0) {
      weights.clear();
      return;
    }
    for (auto& [w, v] : weights) v /= sum;
  }
};

/// L1 score: 1 - 0.5 * sum |a_w - b_w| over the union of words, in [0, 1].
/// Returns 0 if either vector is empty.
inline double similarity(const BowVector& a, const BowVector& b) {
  if (a.empty() || b.empty()) return 0.0;
  double dist = 0.0;
  std::size_t ia = 0, ib = 0;
  while (ia < a.weights.size() && ib < b.weights.size()) {
    const auto& [wa, va] = a.weights[ia];
    const auto& [wb, vb] = b.weights[ib];
    if (wa < wb) {
      dist += va;
      ++ia;
    } else if (wb < wa) {
      dist += vb;
      ++ib;
    } else {
      dist += std::abs(va - vb);
      ++ia;
      ++ib;
    }
  }
  for (; ia < a.weights.size(); ++ia) dist += a.weights[ia].second;
  for (; ib < b.weights.size(); ++ib) dist += b.weights[ib].second;
  return 1.0 - 0.5 * dist;
}

struct VocabNode {
  Descriptor256 center;
  std::uint32_t first_child = 0;
  std::uint32_t num_children = 0;
  std::int32_t word_id = -1;  // >= 0 iff leaf
  double weight = 0.0;        // idf, leaves only
};

class Vocabulary {
 public:
  std::uint32_t k = 10;
  std::uint32_t depth = 6;
  std::uint64_t pattern_seed = 0;
  std::vector<VocabNode> nodes;  // nodes[0] is the root; its center is unused
  std::uint32_t num_words = 0;

  bool empty() const { return nodes.empty(); }

  /// Greedy descent to a leaf word id.
  std::uint32_t word_of(const Descriptor256& d) const {
    std::uint32_t node = 0;
    while (nodes[node].word_id < 0) {
      const VocabNode& n = nodes[node];
      std::uint32_t best = n.first_child;
      int best_dist = 257;
      for (std::uint32_t c = n.first_child; c < n.first_child + n.num_children; ++c) {
        const int dist = hamming(d, nodes[c].center);
        if (dist < best_dist) {
          best_dist = dist;
          best = c;
        }
      }
      node = best;
    }
    return static_cast<std::uint32_t>(nodes[node].word_id);
  }

  double word_weight(std::uint32_t word) const { return word_to_weight_[word]; }

  /// tf-idf bag-of-words vector, L1-normalized. Throws if the features were
  /// extracted with a different BRIEF pattern than the vocabulary was trained
  /// with.
  BowVector transform(const FeatureSet& features) const {
    if (!features.empty() && features.pattern_seed != pattern_seed)
      throw std::invalid_argument("Vocabulary::transform: BRIEF pattern seed mismatch");
    std::map<std::uint32_t, double> acc;
    for (const Feature& f : features.features) {
      const std::uint32_t w = word_of(f.descriptor);
      const double idf = word_to_weight_[w];
      if (idf <= 0.0) continue;
      acc[w] += idf;
    }
    BowVector v = BowVector::from_map(acc);
    v.l1_normalize();
    return v;
  }

  void finalize() {
    word_to_weight_.assign(num_words, 0.0);
    for (const VocabNode& n : nodes)
      if (n.word_id >= 0) word_to_weight_[static_cast<std::size_t>(n.word_id)] = n.weight;
  }

 private:
  std::vector<double> word_to_weight_;
};

namespace detail {

struct ClusterResult {
  std::vector<Descriptor256> centers;
  std::vector<std::vector<std::uint32_t>> members;  // indices into the input list
};

/// k-majority clustering: k-means++-style seeding under Hamming distance,
/// assignment to nearest center, bitwise-majority center update. Ties in the
/// majority vote take the corresponding bit of the cluster's first member.
inline ClusterResult cluster_k_majority(const std::vector<Descriptor256>& descs,
                                        const std::vector<std::uint32_t>& idxs, std::uint32_t k,
                                        std::mt19937_64& rng, int max_iters = 10) {
  ClusterResult res;
  const std::size_t n = idxs.size();

  // seeding
  std::vector<int> min_dist(n, 257);
  {
    std::uniform_int_distribution<std::size_t> pick(0, n - 1);
    res.centers.push_back(descs[idxs[pick(rng)]]);
  }
  while (res.centers.size() < k) {
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const int d = hamming(descs[idxs[i]], res.centers.back());
      min_dist[i] = std::min(min_dist[i], d);
      total += static_cast<double>(min_dist[i]) * min_dist[i];
    }
    if (total <= 0.0) break;  // every descriptor equals some center already
    std::uniform_real_distribution<double> u(0.0, total);
    double target = u(rng);
    std::size_t chosen = n - 1;
    for (std::size_t i = 0; i < n; ++i) {
      target -= static_cast<double>(min_dist[i]) * min_dist[i];
      if (target <= 0.0) {
        chosen = i;
        break;
      }
    }
    res.centers.push_back(descs[idxs[chosen]]);
  }

  const std::size_t nc = res.centers.size();
  std::vector<std::uint32_t> assign(n, 0);
  for (int iter = 0; iter < max_iters; ++iter) {
    bool changed = iter == 0;
    for (std::size_t i = 0; i < n; ++i) {
      int best_d = 257;
      std::uint32_t best_c = 0;
      for (std::size_t c = 0; c < nc; ++c) {
        const int d = hamming(descs[idxs[i]], res.centers[c]);
        if (d < best_d) {
          best_d = d;
          best_c = static_cast<std::uint32_t>(c);
        }
      }
      if (assign[i] != best_c) {
        assign[i] = best_c;
        changed = true;
      }
    }
    if (!changed) break;

    // majority-vote update
    for (std::size_t c = 0; c < nc; ++c) {
      std::array<int, 256> ones{};
      int count = 0;
      std::uint32_t first_member = 0;
      for (std::size_t i = 0; i < n; ++i) {
        if (assign[i] != c) continue;
        if (count == 0) first_member = idxs[i];
        ++count;
        const Descriptor256& d = descs[idxs[i]];
        for (int b = 0; b < 256; ++b) ones[b] += d.bit(b);
      }
      if (count == 0) continue;  // empty cluster keeps its center
      Descriptor256 nc_center{};
      const Descriptor256& fm = descs[first_member];
      for (int b = 0; b < 256; ++b) {
        const int zeros = count - ones[b];
        if (ones[b] > zeros)
          nc_center.set_bit(b);
        else if (ones[b] == zeros && fm.bit(b))
          nc_center.set_bit(b);
      }
      res.centers[c] = nc_center;
    }
  }

  res.members.assign(nc, {});
  for (std::size_t i = 0; i < n; ++i) res.members[assign[i]].push_back(idxs[i]);
  // drop empties
  ClusterResult packed;
  for (std::size_t c = 0; c < nc; ++c) {
    if (res.members[c].empty()) continue;
    packed.centers.push_back(res.centers[c]);
    packed.members.push_back(std::move(res.members[c]));
  }
  return packed;
}

}  // namespace detail

/// Trains a vocabulary over documents of descriptors (one document per scan;
/// documents are the idf unit). Nodes whose member count cannot sustain k
/// children keep fewer; every leaf still sits at depth exactly L.
inline Vocabulary train_vocabulary(const std::vector<std::vector<Descriptor256>>& documents,
                                   std::uint32_t k, std::uint32_t depth, std::uint64_t seed,
                                   std::uint64_t pattern_seed) {
  if (k < 2) throw std::invalid_argument("train_vocabulary: k must be >= 2");
  if (depth < 1) throw std::invalid_argument("train_vocabulary: depth must be >= 1");
  std::vector<Descriptor256> all;
  std::vector<std::uint32_t> doc_of;
  for (std::size_t d = 0; d < documents.size(); ++d) {
    for (const Descriptor256& desc : documents[d]) {
      all.push_back(desc);
      doc_of.push_back(static_cast<std::uint32_t>(d));
    }
  }
  if (all.empty()) throw std::invalid_argument("train_vocabulary: empty corpus");

  Vocabulary voc;
  voc.k = k;
  voc.depth = depth;
  voc.pattern_seed = pattern_seed;
  voc.nodes.emplace_back();  // root

  std::mt19937_64 rng(splitmix64(seed ^ 0x564f4341ULL));

  // iterative DFS so deep chains cannot overflow the stack
  struct Task {
    std::uint32_t node;
    std::vector<std::uint32_t> members;
    std::uint32_t level;  // level of `node`; children sit at level+1
  };
  std::vector<Task> stack;
  {
    std::vector<std::uint32_t> root_members(all.size());
    for (std::uint32_t i = 0; i < all.size(); ++i) root_members[i] = i;
    stack.push_back({0, std::move(root_members), 0});
  }

  std::vector<std::vector<std::uint32_t>> word_members;
  while (!stack.empty()) {
    Task task = std::move(stack.back());
    stack.pop_back();

    if (task.level == depth) {
      voc.nodes[task.node].word_id = static_cast<std::int32_t>(word_members.size());
      word_members.push_back(std::move(task.members));
      continue;
    }

    detail::ClusterResult clusters;
    if (task.members.size() == 1) {
      clusters.centers.push_back(all[task.members[0]]);
      clusters.members.push_back(task.members);
    } else {
      clusters = detail::cluster_k_majority(all, task.members, k, rng);
    }

    const std::uint32_t first = static_cast<std::uint32_t>(voc.nodes.size());
    voc.nodes[task.node].first_child = first;
    voc.nodes[task.node].num_children = static_cast<std::uint32_t>(clusters.centers.size());
    for (std::size_t c = 0; c < clusters.centers.size(); ++c) {
      VocabNode n;
      n.center = clusters.centers[c];
      voc.nodes.push_back(n);
    }
    // push in reverse so children are processed in order (stable word ids)
    for (std::size_t c = clusters.centers.size(); c-- > 0;) {
      stack.push_back({first + static_cast<std::uint32_t>(c), std::move(clusters.members[c]),
                       task.level + 1});
    }
  }

  voc.num_words = static_cast<std::uint32_t>(word_members.size());

  // idf over training documents
  const double n_docs = static_cast<double>(documents.size());
  std::vector<std::uint32_t> docs_seen;
  for (VocabNode& node : voc.nodes) {
    if (node.word_id < 0) continue;
    docs_seen.clear();
    for (const std::uint32_t m : word_members[static_cast<std::size_t>(node.word_id)])
      docs_seen.push_back(doc_of[m]);
    std::sort(docs_seen.begin(), docs_seen.end());
    docs_seen.erase(std::unique(docs_seen.begin(), docs_seen.end()), docs_seen.end());
    node.weight = std::log(n_docs / static_cast<double>(docs_seen.size()));
  }

  voc.finalize();
  return voc;
}

// ---------------------------------------------------------------------------
// Serialization (versioned little-endian binary; layout in docs/formats.md)

namespace detail {

inline void put_u32(std::ostream& out, std::uint32_t v) {
  out.write(reinterpret_cast<const char*>(&v), 4);
}
inline void put_u64(std::ostream& out, std::uint64_t v) {
  out.write(reinterpret_cast<const char*>(&v), 8);
}
inline void put_i32(std::ostream& out, std::int32_t v) {
  out.write(reinterpret_cast<const char*>(&v), 4);
}
inline void put_f64(std::ostream& out, double v) {
  out.write(reinterpret_cast<const char*>(&v), 8);
}
inline std::uint32_t get_u32(std::istream& in) {
  std::uint32_t v;
  in.read(reinterpret_cast<char*>(&v), 4);
  return v;
}
inline std::uint64_t get_u64(std::istream& in) {
  std::uint64_t v;
  in.read(reinterpret_cast<char*>(&v), 8);
  return v;
}
inline std::int32_t get_i32(std::istream& in) {
  std::int32_t v;
  in.read(reinterpret_cast<char*>(&v), 4);
  return v;
}
inline double get_f64(std::istream& in) {
  double v;
  in.read(reinterpret_cast<char*>(&v), 8);
  return v;
}

}  // namespace detail

inline constexpr char kVocabMagic[8] = {'L', 'P', 'R', 'V', 'O', 'C', '0', '1'};

inline void save_vocabulary(const Vocabulary& voc, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write vocabulary: " + path);
  out.write(kVocabMagic, 8);
  detail::put_u32(out, voc.k);
  detail::put_u32(out, voc.depth);
  detail::put_u64(out, voc.pattern_seed);
  detail::put_u32(out, voc.num_words);
  detail::put_u64(out, voc.nodes.size());
  for (const VocabNode& n : voc.nodes) {
    out.write(reinterpret_cast<const char*>(n.center.words.data()), 32);
    detail::put_u32(out, n.first_child);
    detail::put_u32(out, n.num_children);
    detail::put_i32(out, n.word_id);
    detail::put_f64(out, n.weight);
  }
  if (!out) throw std::runtime_error("short write: " + path);
}

inline Vocabulary load_vocabulary(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open vocabulary: " + path);
  char magic[8];
  in.read(magic, 8);
  if (!in || std::memcmp(magic, kVocabMagic, 8) != 0)
    throw std::runtime_error(path + ": not a lipr vocabulary file");
  Vocabulary voc;
  voc.k = detail::get_u32(in);
  voc.depth = detail::get_u32(in);
  voc.pattern_seed = detail::get_u64(in);
  voc.num_words = detail::get_u32(in);
  const std::uint64_t n_nodes = detail::get_u64(in);
  voc.nodes.resize(n_nodes);
  for (VocabNode& n : voc.nodes) {
    in.read(reinterpret_cast<char*>(n.center.words.data()), 32);
    n.first_child = detail::get_u32(in);
    n.num_children = detail::get_u32(in);
    n.word_id = detail::get_i32(in);
    n.weight = detail::get_f64(in);
  }
  if (!in) throw std::runtime_error(path + ": truncated vocabulary file");
  voc.finalize();
  return voc;
}

}  // namespace lipr
