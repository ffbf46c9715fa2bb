#pragma once
// Solution-space value types: a set of centroids (the continuous space)
// and a clustering of point indices (the discrete space).

#include <algorithm>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace kmlab {

// Ordered list of k centers. A center whose cluster is empty is marked
// inactive (degenerate); solvers never move an inactive center.
struct Centroids {
  std::vector<std::vector<double>> centers;
  std::vector<std::uint8_t> active;  // 1 = owns points, 0 = degenerate

  Centroids() = default;
  explicit Centroids(std::vector<std::vector<double>> c)
      : centers(std::move(c)), active(centers.size(), 1) {
    validate();
  }
  Centroids(std::initializer_list<std::vector<double>> c)
      : Centroids(std::vector<std::vector<double>>(c)) {}
  Centroids(std::vector<std::vector<double>> c, std::vector<std::uint8_t> a)
      : centers(std::move(c)), active(std::move(a)) {
    if (active.size() != centers.size())
      throw std::invalid_argument("Centroids: active flag count != center count");
    validate();
  }

  int k() const { return static_cast<int>(centers.size()); }
  int dim() const { return centers.empty() ? 0 : static_cast<int>(centers[0].size()); }
  bool is_active(int r) const { return active[static_cast<std::size_t>(r)] != 0; }
  int active_count() const {
    int c = 0;
    for (auto a : active) c += (a != 0);
    return c;
  }

  void validate() const {
    if (centers.empty()) throw std::invalid_argument("Centroids: k must be >= 1");
    const std::size_t d = centers[0].size();
    for (const auto& c : centers)
      if (c.size() != d)
        throw std::invalid_argument("Centroids: centers have mismatched dimensions");
  }
};

// Partition of point indices into at most k clusters, with cached sizes.
// assignment[i] is a cluster id in [0, k) or kNone.
struct Clustering {
  static constexpr int kNone = -1;

  std::vector<int> assignment;
  std::vector<std::int64_t> sizes;
  int k = 0;

  Clustering() = default;
  Clustering(std::vector<int> a, int k_in) : assignment(std::move(a)), k(k_in) {
    if (k <= 0) throw std::invalid_argument("Clustering: k must be >= 1");
    sizes.assign(static_cast<std::size_t>(k), 0);
    for (int c : assignment) {
      if (c == kNone) continue;
      if (c < 0 || c >= k)
        throw std::invalid_argument("Clustering: cluster id out of range");
      ++sizes[static_cast<std::size_t>(c)];
    }
  }

  std::int64_t n() const { return static_cast<std::int64_t>(assignment.size()); }
  std::int64_t size_of(int r) const { return sizes[static_cast<std::size_t>(r)]; }
  int nonempty_count() const {
    int c = 0;
    for (auto s : sizes) c += (s > 0);
    return c;
  }

  // Label-free canonical form: member lists sorted within, clusters
  // ordered by first member, empty clusters dropped. Two clusterings are
  // the same partition iff their canonical forms are equal.
  std::vector<std::vector<std::int64_t>> canonical() const {
    std::vector<std::vector<std::int64_t>> groups(static_cast<std::size_t>(k));
    for (std::int64_t i = 0; i < n(); ++i) {
      const int c = assignment[static_cast<std::size_t>(i)];
      if (c != kNone) groups[static_cast<std::size_t>(c)].push_back(i);
    }
    std::vector<std::vector<std::int64_t>> out;
    for (auto& g : groups)
      if (!g.empty()) out.push_back(std::move(g));
    std::sort(out.begin(), out.end(),
              [](const auto& a, const auto& b) { return a.front() < b.front(); });
    return out;
  }

  bool same_partition(const Clustering& other) const {
    return canonical() == other.canonical();
  }
};

struct CostReport {
  double total = 0.0;
  std::vector<double> per_cluster;
};

}  // namespace kmlab
