#pragma once
// Initialization: uniform random sampling and Buckshot (single-linkage
// agglomeration of a small uniform sample down to k components, component
// means become the seeds). The sample size m0 is independent of n.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

#include "kmlab/core.hpp"
#include "kmlab/rng.hpp"

namespace kmlab {

struct SeedSpec {
  enum class Method { random_points, buckshot };
  Method method = Method::random_points;
  int k = 1;
  int m0 = 0;  // buckshot sample size; must be >= k
  std::uint64_t seed = 0;

  void validate() const {
    if (k < 1) throw std::invalid_argument("SeedSpec: k must be >= 1");
    if (method == Method::buckshot && m0 < k)
      throw std::invalid_argument("SeedSpec: buckshot requires m0 >= k");
  }
};

// k distinct points sampled uniformly without replacement.
inline Centroids seed_random(const Dataset& ds, int k, Rng& rng) {
  if (k < 1) throw std::invalid_argument("seed_random: k must be >= 1");
  if (static_cast<std::int64_t>(k) > ds.size())
    throw std::invalid_argument("seed_random: k exceeds dataset size");
  std::vector<std::int64_t> idx(static_cast<std::size_t>(ds.size()));
  std::iota(idx.begin(), idx.end(), 0);
  std::vector<std::vector<double>> centers;
  centers.reserve(static_cast<std::size_t>(k));
  for (int r = 0; r < k; ++r) {
    const std::int64_t pick = r + rng.next_index(ds.size() - r);
    std::swap(idx[static_cast<std::size_t>(r)], idx[static_cast<std::size_t>(pick)]);
    centers.push_back(ds.point(idx[static_cast<std::size_t>(r)]).to_dense(ds.dim()));
  }
  return Centroids(std::move(centers));
}

namespace detail {

// Groups of coincident rows (exact zero distance), used to count how many
// components are actually formable.
inline int distinct_position_count(const std::vector<std::vector<double>>& dist2) {
  const std::size_t n = dist2.size();
  std::vector<int> root(n);
  std::iota(root.begin(), root.end(), 0);
  std::function<int(int)> find = [&](int x) {
    while (root[static_cast<std::size_t>(x)] != x) {
      root[static_cast<std::size_t>(x)] = root[static_cast<std::size_t>(root[static_cast<std::size_t>(x)])];
      x = root[static_cast<std::size_t>(x)];
    }
    return x;
  };
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j)
      if (dist2[i][j] == 0.0) {
        const int a = find(static_cast<int>(i)), b = find(static_cast<int>(j));
        if (a != b) root[static_cast<std::size_t>(std::max(a, b))] = std::min(a, b);
      }
  int count = 0;
  for (std::size_t i = 0; i < n; ++i)
    if (find(static_cast<int>(i)) == static_cast<int>(i)) ++count;
  return count;
}

}  // namespace detail

// Single-linkage on a precomputed squared-distance matrix: repeatedly
// merge the two components at minimum inter-point distance until
// target_components remain. Ties break on the smallest (id, id) pair,
// where a component's id is its smallest member index. Returns the
// component id of each point.
inline std::vector<int> single_linkage_from_distances(
    const std::vector<std::vector<double>>& dist2, int target_components) {
  const int n = static_cast<int>(dist2.size());
  if (n == 0) throw std::invalid_argument("single_linkage: empty point set");
  if (target_components < 1 || target_components > n)
    throw std::invalid_argument("single_linkage: bad target component count");
  if (target_components > detail::distinct_position_count(dist2))
    throw std::invalid_argument(
        "single_linkage: target exceeds the number of distinct points");

  std::vector<int> label(static_cast<std::size_t>(n));
  std::iota(label.begin(), label.end(), 0);
  std::vector<char> alive(static_cast<std::size_t>(n), 1);
  // comp_d[a][b]: min point-pair squared distance between components a, b
  std::vector<std::vector<double>> comp_d = dist2;
  int components = n;

  while (components > target_components) {
    double best = std::numeric_limits<double>::infinity();
    int best_a = -1, best_b = -1;
    for (int a = 0; a < n; ++a) {
      if (!alive[static_cast<std::size_t>(a)]) continue;
      for (int b = a + 1; b < n; ++b) {
        if (!alive[static_cast<std::size_t>(b)]) continue;
        const double d = comp_d[static_cast<std::size_t>(a)][static_cast<std::size_t>(b)];
        if (d < best) {
          best = d;
          best_a = a;
          best_b = b;
        }
      }
    }
    // merge b into a (a < b); single-linkage update is the pairwise min
    for (int x = 0; x < n; ++x) {
      if (!alive[static_cast<std::size_t>(x)] || x == best_a || x == best_b) continue;
      const double d = std::min(
          comp_d[static_cast<std::size_t>(best_a)][static_cast<std::size_t>(x)],
          comp_d[static_cast<std::size_t>(best_b)][static_cast<std::size_t>(x)]);
      comp_d[static_cast<std::size_t>(best_a)][static_cast<std::size_t>(x)] = d;
      comp_d[static_cast<std::size_t>(x)][static_cast<std::size_t>(best_a)] = d;
    }
    alive[static_cast<std::size_t>(best_b)] = 0;
    for (int i = 0; i < n; ++i)
      if (label[static_cast<std::size_t>(i)] == best_b)
        label[static_cast<std::size_t>(i)] = best_a;
    --components;
  }
  return label;
}

inline std::vector<int> single_linkage(const std::vector<std::vector<double>>& points,
                                       int target_components) {
  const std::size_t n = points.size();
  std::vector<std::vector<double>> dist2(n, std::vector<double>(n, 0.0));
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) {
      double s = 0.0;
      for (std::size_t c = 0; c < points[i].size(); ++c) {
        const double d = points[i][c] - points[j][c];
        s += d * d;
      }
      dist2[i][j] = dist2[j][i] = s;
    }
  return single_linkage_from_distances(dist2, target_components);
}

// Buckshot: sample m0 points uniformly with replacement, single-linkage
// down to k components, return the component means. Duplicate samples
// merge first (distance zero) and still count toward component means.
inline Centroids seed_buckshot(const Dataset& ds, int k, int m0, Rng& rng) {
  if (k < 1) throw std::invalid_argument("seed_buckshot: k must be >= 1");
  if (m0 < k) throw std::invalid_argument("seed_buckshot: m0 must be >= k");

  std::vector<std::int64_t> sample(static_cast<std::size_t>(m0));
  for (auto& s : sample) s = rng.next_index(ds.size());

  std::vector<std::vector<double>> dist2(static_cast<std::size_t>(m0),
                                         std::vector<double>(static_cast<std::size_t>(m0), 0.0));
  for (int i = 0; i < m0; ++i) {
    const Point& pi = ds.point(sample[static_cast<std::size_t>(i)]);
    const std::vector<double> xi = pi.to_dense(ds.dim());
    for (int j = i + 1; j < m0; ++j) {
      const Point& pj = ds.point(sample[static_cast<std::size_t>(j)]);
      const double d = std::max(0.0, pi.squared_norm() - 2.0 * pj.dot(xi) + pj.squared_norm());
      dist2[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] = d;
      dist2[static_cast<std::size_t>(j)][static_cast<std::size_t>(i)] = d;
    }
  }
  if (detail::distinct_position_count(dist2) < k)
    throw std::invalid_argument(
        "seed_buckshot: fewer than k distinct sampled points; increase m0");

  const std::vector<int> label = single_linkage_from_distances(dist2, k);

  // component means in order of component id (smallest member index)
  std::vector<int> ids;
  for (int i = 0; i < m0; ++i)
    if (label[static_cast<std::size_t>(i)] == i) ids.push_back(i);
  std::vector<std::vector<double>> centers(static_cast<std::size_t>(k),
                                           std::vector<double>(static_cast<std::size_t>(ds.dim()), 0.0));
  std::vector<std::int64_t> counts(static_cast<std::size_t>(k), 0);
  for (int i = 0; i < m0; ++i) {
    const auto comp = static_cast<std::size_t>(
        std::lower_bound(ids.begin(), ids.end(), label[static_cast<std::size_t>(i)]) - ids.begin());
    ds.point(sample[static_cast<std::size_t>(i)]).add_to(centers[comp]);
    ++counts[comp];
  }
  for (std::size_t r = 0; r < centers.size(); ++r) {
    const double inv = 1.0 / static_cast<double>(counts[r]);
    for (auto& v : centers[r]) v *= inv;
  }
  return Centroids(std::move(centers));
}

inline Centroids make_seeds(const Dataset& ds, const SeedSpec& spec) {
  spec.validate();
  Rng rng(spec.seed);
  if (spec.method == SeedSpec::Method::random_points) return seed_random(ds, spec.k, rng);
  return seed_buckshot(ds, spec.k, spec.m0, rng);
}

}  // namespace kmlab
