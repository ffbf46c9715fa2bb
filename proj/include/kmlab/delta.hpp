#pragma once
// Centroidal distance Delta(C', C) = min over injections pi of
// sum_r n_r ||c'_pi(r) - c_r||^2, weighted by the target solution's
// cluster sizes. Asymmetric, non-negative, zero iff matched centers
// coincide. Exact mode solves the rectangular assignment problem; greedy
// mode is the cubic-free fallback for large k and never undershoots.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <span>
#include <stdexcept>
#include <vector>

#include "kmlab/core.hpp"
#include "kmlab/hungarian.hpp"

namespace kmlab {

enum class DeltaMode { exact, greedy, auto_select };

struct DeltaResult {
  double value = 0.0;
  std::vector<int> permutation;  // target cluster r -> center index in `from`
  DeltaMode method = DeltaMode::exact;
};

namespace detail {

inline double center_dist2(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0.0;
  for (std::size_t j = 0; j < a.size(); ++j) {
    const double d = a[j] - b[j];
    s += d * d;
  }
  return s;
}

}  // namespace detail

// weights[r] is the size of target cluster r (|A_r| for the clustering
// inducing `to`). `from` must have at least as many active centers as
// `to` has centers; degenerate centers of `from` are ignored.
inline DeltaResult delta(const Centroids& from, const Centroids& to,
                         std::span<const std::int64_t> weights,
                         DeltaMode mode = DeltaMode::auto_select) {
  const int k = to.k();
  if (static_cast<int>(weights.size()) != k)
    throw std::invalid_argument("delta: need one weight per target cluster");
  if (from.dim() != to.dim())
    throw std::invalid_argument("delta: dimension mismatch");
  std::vector<int> sources;
  for (int s = 0; s < from.k(); ++s)
    if (from.is_active(s)) sources.push_back(s);
  if (static_cast<int>(sources.size()) < k)
    throw std::invalid_argument(
        "delta: fewer active source centers than target centers; the distance is undefined");

  if (mode == DeltaMode::auto_select)
    mode = (k <= 64) ? DeltaMode::exact : DeltaMode::greedy;

  std::vector<int> pi(static_cast<std::size_t>(k), -1);
  if (mode == DeltaMode::exact) {
    std::vector<std::vector<double>> cost_matrix(
        static_cast<std::size_t>(k), std::vector<double>(sources.size(), 0.0));
    for (int r = 0; r < k; ++r)
      for (std::size_t s = 0; s < sources.size(); ++s)
        cost_matrix[static_cast<std::size_t>(r)][s] =
            static_cast<double>(weights[static_cast<std::size_t>(r)]) *
            detail::center_dist2(from.centers[static_cast<std::size_t>(sources[s])],
                                 to.centers[static_cast<std::size_t>(r)]);
    const std::vector<int> row_to_col = solve_assignment(cost_matrix);
    for (int r = 0; r < k; ++r)
      pi[static_cast<std::size_t>(r)] = sources[static_cast<std::size_t>(row_to_col[static_cast<std::size_t>(r)])];
  } else {
    // Heaviest target first, nearest unused source; ties to lower index.
    std::vector<int> order(static_cast<std::size_t>(k));
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
      return weights[static_cast<std::size_t>(a)] > weights[static_cast<std::size_t>(b)];
    });
    std::vector<char> used(sources.size(), 0);
    for (int r : order) {
      double best = std::numeric_limits<double>::infinity();
      int best_s = -1;
      for (std::size_t s = 0; s < sources.size(); ++s) {
        if (used[s]) continue;
        const double d = detail::center_dist2(from.centers[static_cast<std::size_t>(sources[s])],
                                              to.centers[static_cast<std::size_t>(r)]);
        if (d < best) {
          best = d;
          best_s = static_cast<int>(s);
        }
      }
      used[static_cast<std::size_t>(best_s)] = 1;
      pi[static_cast<std::size_t>(r)] = sources[static_cast<std::size_t>(best_s)];
    }
  }

  double value = 0.0;
  for (int r = 0; r < k; ++r)
    value += static_cast<double>(weights[static_cast<std::size_t>(r)]) *
             detail::center_dist2(from.centers[static_cast<std::size_t>(pi[static_cast<std::size_t>(r)])],
                                  to.centers[static_cast<std::size_t>(r)]);
  return DeltaResult{value, std::move(pi), mode};
}

struct CostGapResult {
  double gap = 0.0;
  double delta_value = 0.0;
  bool holds = false;
};

// Checks phi(C) - phi(C*) <= Delta(C, C*) for a stationary (C*, A*);
// both costs use each solution's own Voronoi clustering.
inline CostGapResult cost_gap_bound_check(const Dataset& ds, const Centroids& c,
                                          const Centroids& cstar, const Clustering& astar) {
  if (astar.k != cstar.k())
    throw std::invalid_argument("cost_gap_bound_check: clustering/centroid k mismatch");
  const double phi_c = voronoi_cost(ds, c);
  const double phi_star = voronoi_cost(ds, cstar);
  const DeltaResult d = delta(c, cstar, astar.sizes, DeltaMode::exact);
  const double gap = phi_c - phi_star;
  const bool holds = gap <= d.value + 1e-9 * std::max(1.0, d.value);
  return CostGapResult{gap, d.value, holds};
}

}  // namespace kmlab
