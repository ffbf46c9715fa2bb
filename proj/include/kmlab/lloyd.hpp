#pragma once
// Batch k-means (Lloyd's) with the equivalence-class stopping rule:
// the run ends exactly when two consecutive iterations produce the same
// clustering. Degenerate clusters freeze in place and are never
// re-located.

#include <cstdint>
#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "kmlab/core.hpp"

namespace kmlab {

enum class StopReason { stationary, max_iters, boundary_ambiguous };

inline const char* to_string(StopReason r) {
  switch (r) {
    case StopReason::stationary: return "stationary";
    case StopReason::max_iters: return "max_iters";
    case StopReason::boundary_ambiguous: return "boundary_ambiguous";
  }
  return "?";
}

struct BatchTraceRow {
  int t = 0;
  double phi = 0.0;
  bool degenerate_event = false;  // some cluster emptied at this iteration
};

struct BatchResult {
  Centroids final_centroids;
  Clustering final_clustering;
  std::vector<BatchTraceRow> trace;  // phi after each mean update; non-increasing
  StopReason stopped_reason = StopReason::max_iters;
  int iterations = 0;
};

inline BatchResult lloyd_run(const Dataset& ds, const Centroids& c0, int max_iters,
                             double boundary_tol = 0.0) {
  if (c0.dim() != ds.dim())
    throw std::invalid_argument("lloyd_run: centroid dimension != dataset dimension");
  BatchResult out;
  Centroids c = c0;
  std::optional<Clustering> prev;
  out.stopped_reason = StopReason::max_iters;

  for (int t = 1; t <= max_iters; ++t) {
    AssignResult ar = assign(ds, c, boundary_tol);
    if (prev && ar.clustering.same_partition(*prev)) {
      out.stopped_reason =
          ar.boundary_hit ? StopReason::boundary_ambiguous : StopReason::stationary;
      prev = std::move(ar.clustering);
      break;
    }
    Centroids m = means(ds, ar.clustering);
    bool degenerated = false;
    for (int r = 0; r < m.k(); ++r) {
      if (!m.is_active(r)) {
        // no re-location: keep the old position, stay degenerate
        m.centers[static_cast<std::size_t>(r)] = c.centers[static_cast<std::size_t>(r)];
        if (c.is_active(r)) degenerated = true;
      }
    }
    c = std::move(m);
    const double phi = cost(ds, c, ar.clustering).total;
    out.trace.push_back(BatchTraceRow{t, phi, degenerated});
    out.iterations = t;
    prev = std::move(ar.clustering);
  }

  if (!prev) prev = assign(ds, c).clustering;  // max_iters == 0
  out.final_centroids = std::move(c);
  out.final_clustering = std::move(*prev);
  return out;
}

struct StationaryCheck {
  bool stationary = false;
  bool boundary = false;
};

// A clustering is stationary when assigning against its own means
// reproduces it (up to relabeling). boundary reports a bisector hit in
// that assignment, i.e. membership in the closure rather than the
// interior of the equivalence class.
inline StationaryCheck is_stationary(const Dataset& ds, const Clustering& a,
                                     double boundary_tol = 0.0) {
  const Centroids m = means(ds, a);
  if (m.active_count() == 0)
    throw std::invalid_argument("is_stationary: clustering has no nonempty cluster");
  const AssignResult ar = assign(ds, m, boundary_tol);
  return StationaryCheck{ar.clustering.same_partition(a), ar.boundary_hit};
}

struct StationaryPoint {
  Clustering clustering;
  Centroids centroids;
};

// Exhaustive search over all partitions of [n] into at most k nonempty
// parts, in restricted-growth-string order (so each partition appears
// once, already label-canonical). Desk-scale only.
inline std::vector<StationaryPoint> enumerate_stationary(const Dataset& ds, int k) {
  const std::int64_t n = ds.size();
  if (n > 14 || k > 3)
    throw std::invalid_argument(
        "enumerate_stationary: instance too large for enumeration (need n <= 14, k <= 3)");
  if (k < 1) throw std::invalid_argument("enumerate_stationary: k must be >= 1");

  std::vector<StationaryPoint> out;
  std::vector<int> rgs(static_cast<std::size_t>(n), 0);

  auto emit = [&](int used) {
    Clustering a(rgs, used);
    const StationaryCheck sc = is_stationary(ds, a);
    if (sc.stationary) {
      Centroids m = means(ds, a);
      out.push_back(StationaryPoint{std::move(a), std::move(m)});
    }
  };

  // restricted growth strings with at most k labels
  std::function<void(std::int64_t, int)> rec = [&](std::int64_t i, int used) {
    if (i == n) {
      emit(used);
      return;
    }
    const int limit = std::min(used + 1, k);
    for (int c = 0; c < limit; ++c) {
      rgs[static_cast<std::size_t>(i)] = c;
      rec(i + 1, std::max(used, c + 1));
    }
  };
  rec(0, 0);
  return out;
}

}  // namespace kmlab
