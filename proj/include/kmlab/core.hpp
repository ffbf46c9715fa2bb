#pragma once
// The shared mathematical core: Voronoi assignment v(C), the mean map
// m(A), the k-means cost phi, and the centroidal identity. All functions
// are pure; per-cluster reductions run in fixed index order so results do
// not depend on scheduling.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <limits>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "kmlab/dataset.hpp"
#include "kmlab/solution.hpp"

namespace kmlab {

namespace detail {

inline std::vector<double> center_squared_norms(const Centroids& c) {
  std::vector<double> out(static_cast<std::size_t>(c.k()), 0.0);
  for (int r = 0; r < c.k(); ++r) {
    double s = 0.0;
    for (double v : c.centers[static_cast<std::size_t>(r)]) s += v * v;
    out[static_cast<std::size_t>(r)] = s;
  }
  return out;
}

// ||x - c||^2 via the norm expansion with cached ||x||^2; clamped at zero
// since cancellation can leave a tiny negative residue.
inline double dist2(const Point& p, std::span<const double> center, double center_sqnorm) {
  const double d = p.squared_norm() - 2.0 * p.dot(center) + center_sqnorm;
  return d > 0.0 ? d : 0.0;
}

}  // namespace detail

struct AssignResult {
  Clustering clustering;
  bool boundary_hit = false;
};

// Assigns every point to its nearest active center; ties go to the lowest
// center index. boundary_hit reports whether some point's two nearest
// distinct active centers are equidistant within boundary_tol (exact
// equality by default), i.e. the solution sits on an equivalence-class
// boundary and the induced clustering is ambiguous.
inline AssignResult assign(const Dataset& ds, const Centroids& c,
                           double boundary_tol = 0.0) {
  if (c.dim() != ds.dim())
    throw std::invalid_argument("assign: centroid dimension != dataset dimension");
  if (c.active_count() == 0)
    throw std::invalid_argument("assign: all centers inactive");

  const std::vector<double> sqn = detail::center_squared_norms(c);
  std::vector<int> a(static_cast<std::size_t>(ds.size()), Clustering::kNone);
  bool boundary = false;

  for (std::int64_t i = 0; i < ds.size(); ++i) {
    const Point& p = ds.point(i);
    int best = -1;
    double best_d = std::numeric_limits<double>::infinity();
    double second_d = std::numeric_limits<double>::infinity();
    for (int r = 0; r < c.k(); ++r) {
      if (!c.is_active(r)) continue;
      const double d = detail::dist2(p, c.centers[static_cast<std::size_t>(r)],
                                     sqn[static_cast<std::size_t>(r)]);
      if (d < best_d) {
        second_d = best_d;
        best_d = d;
        best = r;
      } else if (d < second_d) {
        second_d = d;
      }
    }
    a[static_cast<std::size_t>(i)] = best;
    if (std::isfinite(second_d) &&
        std::sqrt(second_d) - std::sqrt(best_d) <= boundary_tol)
      boundary = true;
  }
  return AssignResult{Clustering(std::move(a), c.k()), boundary};
}

// Per-cluster arithmetic means. Empty clusters come back inactive with a
// zero position; callers that freeze degenerate centers keep the previous
// position themselves.
inline Centroids means(const Dataset& ds, const Clustering& a) {
  if (a.n() != ds.size())
    throw std::invalid_argument("means: clustering size != dataset size");
  const std::size_t k = static_cast<std::size_t>(a.k);
  std::vector<std::vector<double>> centers(k, std::vector<double>(static_cast<std::size_t>(ds.dim()), 0.0));
  std::vector<std::uint8_t> active(k, 0);
  for (std::int64_t i = 0; i < ds.size(); ++i) {
    const int r = a.assignment[static_cast<std::size_t>(i)];
    if (r == Clustering::kNone) continue;
    ds.point(i).add_to(centers[static_cast<std::size_t>(r)]);
  }
  for (std::size_t r = 0; r < k; ++r) {
    const std::int64_t nr = a.sizes[r];
    if (nr > 0) {
      active[r] = 1;
      const double inv = 1.0 / static_cast<double>(nr);
      for (auto& v : centers[r]) v *= inv;
    }
  }
  return Centroids(std::move(centers), std::move(active));
}

enum class CostMode { expanded, naive };

// phi(C, A) = sum_r sum_{x in A_r} ||x - c_r||^2. The default uses the
// norm expansion with cached point norms; naive mode recomputes the
// coordinate-wise difference and exists for oracle cross-checks.
inline CostReport cost(const Dataset& ds, const Centroids& c, const Clustering& a,
                       CostMode mode = CostMode::expanded) {
  if (c.dim() != ds.dim() || a.n() != ds.size() || a.k != c.k())
    throw std::invalid_argument("cost: shape mismatch");
  CostReport rep;
  rep.per_cluster.assign(static_cast<std::size_t>(a.k), 0.0);
  const std::vector<double> sqn = detail::center_squared_norms(c);
  for (std::int64_t i = 0; i < ds.size(); ++i) {
    const int r = a.assignment[static_cast<std::size_t>(i)];
    if (r == Clustering::kNone) continue;
    const auto& center = c.centers[static_cast<std::size_t>(r)];
    double d;
    if (mode == CostMode::expanded) {
      d = detail::dist2(ds.point(i), center, sqn[static_cast<std::size_t>(r)]);
    } else {
      const std::vector<double> x = ds.point(i).to_dense(ds.dim());
      d = 0.0;
      for (std::size_t j = 0; j < x.size(); ++j) {
        const double diff = x[j] - center[j];
        d += diff * diff;
      }
    }
    rep.per_cluster[static_cast<std::size_t>(r)] += d;
  }
  rep.total = 0.0;
  for (double v : rep.per_cluster) rep.total += v;
  return rep;
}

// phi(C) with the clustering induced by C's own Voronoi diagram.
inline double voronoi_cost(const Dataset& ds, const Centroids& c) {
  const AssignResult ar = assign(ds, c);
  return cost(ds, c, ar.clustering).total;
}

// Residual of the identity phi(c, Y) = phi(m(Y), Y) + |Y| * ||m(Y) - c||^2,
// evaluated directly on both sides.
inline double centroidal_identity_check(std::span<const std::vector<double>> y,
                                        std::span<const double> c) {
  if (y.empty()) throw std::invalid_argument("centroidal_identity_check: |Y| must be >= 1");
  const std::size_t d = c.size();
  std::vector<double> mean(d, 0.0);
  for (const auto& p : y)
    for (std::size_t j = 0; j < d; ++j) mean[j] += p[j];
  for (auto& v : mean) v /= static_cast<double>(y.size());

  double phi_c = 0.0, phi_m = 0.0, shift = 0.0;
  for (const auto& p : y) {
    for (std::size_t j = 0; j < d; ++j) {
      const double dc = p[j] - c[j];
      const double dm = p[j] - mean[j];
      phi_c += dc * dc;
      phi_m += dm * dm;
    }
  }
  for (std::size_t j = 0; j < d; ++j) {
    const double dj = mean[j] - c[j];
    shift += dj * dj;
  }
  shift *= static_cast<double>(y.size());
  return std::abs(phi_c - phi_m - shift);
}

// ---------------------------------------------------------------------------
// Serialization: centers as dense CSV rows plus one active-flag line;
// clusterings as one cluster id per line (-1 = unassigned).

inline void write_centroids_csv(const Centroids& c, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw io_error("cannot open file for writing: " + path);
  for (int r = 0; r < c.k(); ++r) {
    const auto& row = c.centers[static_cast<std::size_t>(r)];
    for (std::size_t j = 0; j < row.size(); ++j) {
      if (j) out << ',';
      out << detail::format_double(row[j]);
    }
    out << '\n';
  }
  out << "# active:";
  for (int r = 0; r < c.k(); ++r) out << ' ' << (c.is_active(r) ? 1 : 0);
  out << '\n';
  if (!out) throw io_error("write failed: " + path);
}

inline Centroids load_centroids_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw io_error("cannot open centroids file: " + path);
  std::vector<std::vector<double>> centers;
  std::vector<std::uint8_t> active;
  std::string line;
  std::int64_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    while (!line.empty() && (line.back() == '\r' || line.back() == '\n')) line.pop_back();
    if (line.empty()) continue;
    if (line[0] == '#') {
      if (line.find("active") != std::string::npos) {
        const auto colon = line.find(':');
        for (auto tok : detail::split_ws(line.substr(colon == std::string::npos ? 1 : colon + 1))) {
          if (tok == "1")
            active.push_back(1);
          else if (tok == "0")
            active.push_back(0);
          else
            throw io_error(path + ":" + std::to_string(lineno) + ": bad active flag");
        }
      }
      continue;
    }
    std::vector<double> row;
    std::size_t start = 0;
    while (true) {
      const auto comma = line.find(',', start);
      std::string_view tok(line.data() + start,
                           (comma == std::string::npos ? line.size() : comma) - start);
      double v = 0.0;
      if (!detail::parse_double(tok, v))
        throw io_error(path + ":" + std::to_string(lineno) + ": bad value '" +
                       std::string(tok) + "'");
      row.push_back(v);
      if (comma == std::string::npos) break;
      start = comma + 1;
    }
    centers.push_back(std::move(row));
  }
  if (centers.empty()) throw io_error(path + ": no centers");
  if (active.empty()) active.assign(centers.size(), 1);
  if (active.size() != centers.size())
    throw io_error(path + ": active flag count does not match center count");
  return Centroids(std::move(centers), std::move(active));
}

inline void write_assignment(const Clustering& a, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw io_error("cannot open file for writing: " + path);
  for (int v : a.assignment) out << v << '\n';
  if (!out) throw io_error("write failed: " + path);
}

inline Clustering load_assignment(const std::string& path, int k = 0) {
  std::ifstream in(path);
  if (!in) throw io_error("cannot open assignment file: " + path);
  std::vector<int> a;
  std::string line;
  std::int64_t lineno = 0;
  int max_id = -1;
  while (std::getline(in, line)) {
    ++lineno;
    auto toks = detail::split_ws(line);
    if (toks.empty()) continue;
    int v = 0;
    auto res = std::from_chars(toks[0].data(), toks[0].data() + toks[0].size(), v);
    if (res.ec != std::errc() || v < Clustering::kNone)
      throw io_error(path + ":" + std::to_string(lineno) + ": bad cluster id");
    a.push_back(v);
    max_id = std::max(max_id, v);
  }
  if (a.empty()) throw io_error(path + ": empty assignment");
  if (k <= 0) k = max_id + 1;
  return Clustering(std::move(a), std::max(k, 1));
}

}  // namespace kmlab
