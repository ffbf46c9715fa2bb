#pragma once
// Shared fixtures and independent oracles for the unit suite. Oracles are
// deliberately written against the definitions, not the library paths
// they check.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <string>
#include <vector>

#include "kmlab/dataset.hpp"
#include "kmlab/rng.hpp"
#include "kmlab/solution.hpp"

namespace testutil {

inline kmlab::Dataset dense_dataset(std::vector<std::vector<double>> rows) {
  std::vector<kmlab::Point> pts;
  const int dim = static_cast<int>(rows.front().size());
  for (auto& r : rows) pts.push_back(kmlab::Point::dense(std::move(r)));
  return kmlab::Dataset(std::move(pts), dim);
}

inline kmlab::Dataset dataset_1d(std::vector<double> xs) {
  std::vector<std::vector<double>> rows;
  for (double x : xs) rows.push_back({x});
  return dense_dataset(std::move(rows));
}

inline std::vector<std::vector<double>> random_rows(kmlab::Rng& rng, std::int64_t n, int d,
                                                    double lo = -10.0, double hi = 10.0) {
  std::vector<std::vector<double>> rows(static_cast<std::size_t>(n),
                                        std::vector<double>(static_cast<std::size_t>(d)));
  for (auto& r : rows)
    for (auto& v : r) v = lo + (hi - lo) * rng.next_unit();
  return rows;
}

// Planted, well separated instance used across the batch/theory tests.
inline kmlab::PlantedInstance planted_fixture(int k, int d, std::int64_t per_cluster,
                                              double separation, double radius,
                                              std::uint64_t seed) {
  kmlab::SyntheticSpec spec;
  spec.k = k;
  spec.dim = d;
  spec.sizes.assign(static_cast<std::size_t>(k), per_cluster);
  spec.centers.assign(static_cast<std::size_t>(k),
                      std::vector<double>(static_cast<std::size_t>(d), 0.0));
  for (int r = 1; r < k; ++r)
    spec.centers[static_cast<std::size_t>(r)][static_cast<std::size_t>((r - 1) % d)] = separation;
  spec.radius = radius;
  spec.seed = seed;
  return kmlab::generate_clusterable(spec);
}

inline double dist2(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0.0;
  for (std::size_t j = 0; j < a.size(); ++j) {
    const double d = a[j] - b[j];
    s += d * d;
  }
  return s;
}

// Brute-force nearest-center assignment from an explicit distance matrix;
// ties to the lowest index, exactly like the contract under test.
inline std::vector<int> brute_force_assign(const kmlab::Dataset& ds,
                                           const kmlab::Centroids& c) {
  std::vector<int> out(static_cast<std::size_t>(ds.size()), -1);
  for (std::int64_t i = 0; i < ds.size(); ++i) {
    const std::vector<double> x = ds.point(i).to_dense(ds.dim());
    double best = std::numeric_limits<double>::infinity();
    int best_r = -1;
    for (int r = 0; r < c.k(); ++r) {
      if (!c.is_active(r)) continue;
      const double d = dist2(x, c.centers[static_cast<std::size_t>(r)]);
      if (d < best) {
        best = d;
        best_r = r;
      }
    }
    out[static_cast<std::size_t>(i)] = best_r;
  }
  return out;
}

// Naive phi: coordinate-wise squared differences, no norm expansion.
inline double naive_cost(const kmlab::Dataset& ds, const kmlab::Centroids& c,
                         const std::vector<int>& assignment) {
  double total = 0.0;
  for (std::int64_t i = 0; i < ds.size(); ++i) {
    const int r = assignment[static_cast<std::size_t>(i)];
    if (r < 0) continue;
    total += dist2(ds.point(i).to_dense(ds.dim()), c.centers[static_cast<std::size_t>(r)]);
  }
  return total;
}

// Exhaustive minimum of sum_r w_r ||from[inj(r)] - to[r]||^2 over all
// injections of targets into active sources.
inline double brute_force_delta(const kmlab::Centroids& from, const kmlab::Centroids& to,
                                const std::vector<std::int64_t>& weights) {
  std::vector<int> sources;
  for (int s = 0; s < from.k(); ++s)
    if (from.is_active(s)) sources.push_back(s);
  const int k = to.k();
  std::vector<int> chosen;
  std::vector<char> used(sources.size(), 0);
  double best = std::numeric_limits<double>::infinity();
  std::function<void(int, double)> rec = [&](int r, double acc) {
    if (acc >= best) return;
    if (r == k) {
      best = acc;
      return;
    }
    for (std::size_t s = 0; s < sources.size(); ++s) {
      if (used[s]) continue;
      used[s] = 1;
      rec(r + 1, acc + static_cast<double>(weights[static_cast<std::size_t>(r)]) *
                           dist2(from.centers[static_cast<std::size_t>(sources[s])],
                                 to.centers[static_cast<std::size_t>(r)]));
      used[s] = 0;
    }
  };
  rec(0, 0.0);
  return best;
}

// Naive O(n^3) single linkage: each round scans every cross-component
// point pair for the global minimum; ties break on the smallest pair of
// component ids (a component's id is its smallest member).
inline std::vector<int> naive_single_linkage(const std::vector<std::vector<double>>& pts,
                                             int target) {
  const int n = static_cast<int>(pts.size());
  std::vector<int> comp(static_cast<std::size_t>(n));
  std::iota(comp.begin(), comp.end(), 0);
  auto comp_count = [&] {
    std::vector<int> ids(comp.begin(), comp.end());
    std::sort(ids.begin(), ids.end());
    ids.erase(std::unique(ids.begin(), ids.end()), ids.end());
    return static_cast<int>(ids.size());
  };
  while (comp_count() > target) {
    double best = std::numeric_limits<double>::infinity();
    int ba = -1, bb = -1;
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) {
        if (comp[static_cast<std::size_t>(i)] == comp[static_cast<std::size_t>(j)]) continue;
        const int a = std::min(comp[static_cast<std::size_t>(i)], comp[static_cast<std::size_t>(j)]);
        const int b = std::max(comp[static_cast<std::size_t>(i)], comp[static_cast<std::size_t>(j)]);
        const double d = dist2(pts[static_cast<std::size_t>(i)], pts[static_cast<std::size_t>(j)]);
        if (d < best || (d == best && (a < ba || (a == ba && b < bb)))) {
          best = d;
          ba = a;
          bb = b;
        }
      }
    for (auto& c : comp)
      if (c == bb) c = ba;
  }
  return comp;
}

// Canonical string of a partition for set comparisons.
inline std::string canonical_string(const kmlab::Clustering& a) {
  std::string s;
  for (const auto& group : a.canonical()) {
    s += '{';
    for (auto i : group) {
      s += std::to_string(i);
      s += ',';
    }
    s += '}';
  }
  return s;
}

}  // namespace testutil
