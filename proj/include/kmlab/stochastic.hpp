#pragma once
// Stochastic k-means: each iteration draws a mini-batch of size m
// uniformly with replacement, assigns the samples to their nearest
// centers, and moves every center that received samples by a convex step
//   c_r <- (1 - eta) c_r + eta chat_r,   chat_r = batch mean for cluster r.
// Centers that received no samples do not move. Rates: a flat c'/(t0+t)
// shared by all clusters, or the per-cluster BBS rate nhat_r / Nhat_r
// which makes each center the running average of its assigned samples.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <limits>
#include <optional>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "kmlab/core.hpp"
#include "kmlab/delta.hpp"
#include "kmlab/digest.hpp"
#include "kmlab/rng.hpp"

namespace kmlab {

struct RatePolicy {
  enum class Kind { flat, bbs };
  Kind kind = Kind::flat;
  double c_prime = 2.0;
  double t0 = 3.0;

  // eta^t = c'/(t0+t) must stay below 1 from t = 1 on.
  static RatePolicy flat(double c_prime, double t0) {
    if (c_prime <= 0.0) throw std::invalid_argument("flat rate: c' must be positive");
    if (t0 < 0.0) throw std::invalid_argument("flat rate: t0 must be nonnegative");
    if (c_prime >= t0 + 1.0)
      throw std::invalid_argument(
          "flat rate: need c' < t0 + 1, otherwise eta^1 >= 1 and the update leaves the convex regime");
    return RatePolicy{Kind::flat, c_prime, t0};
  }

  static RatePolicy bbs() { return RatePolicy{Kind::bbs, 0.0, 0.0}; }

  std::string label() const {
    if (kind == Kind::bbs) return "bbs";
    char buf[64];
    std::snprintf(buf, sizeof(buf), "flat_%g_%g", c_prime, t0);
    return std::string(buf);
  }
};

// Per-run mutable rate state. BBS keeps cumulative per-cluster counts
// Nhat_r, incremented before the rate is computed, so the first hit of a
// cluster uses eta = 1 (the center jumps to the batch mean).
struct PolicyState {
  RatePolicy policy;
  std::vector<std::int64_t> cumulative_counts;

  explicit PolicyState(const RatePolicy& p, int k)
      : policy(p), cumulative_counts(static_cast<std::size_t>(k), 0) {}

  double rate(int r, std::int64_t nhat, std::int64_t t) {
    if (policy.kind == RatePolicy::Kind::flat)
      return policy.c_prime / (policy.t0 + static_cast<double>(t));
    cumulative_counts[static_cast<std::size_t>(r)] += nhat;
    return static_cast<double>(nhat) /
           static_cast<double>(cumulative_counts[static_cast<std::size_t>(r)]);
  }
};

struct BatchStats {
  std::vector<std::int64_t> nhat;
  int updated_clusters = 0;
  double eta_min = std::numeric_limits<double>::quiet_NaN();
  double eta_max = std::numeric_limits<double>::quiet_NaN();
};

struct ReferenceSolution {
  Centroids centroids;
  std::vector<std::int64_t> weights;  // reference cluster sizes n_r*
};

struct StochasticConfig {
  std::int64_t m = 1;
  RatePolicy policy = RatePolicy::flat(2.0, 3.0);
  std::int64_t max_iters = 100;
  std::uint64_t seed = 0;
  std::int64_t cost_eval_every = 1;  // full-cost instrumentation period
  double plateau_eps = 1e-6;         // relative improvement threshold; 0 disables
  int plateau_window = 10;
  std::optional<ReferenceSolution> reference;

  void validate() const {
    if (m < 1) throw std::invalid_argument("StochasticConfig: m must be >= 1");
    if (max_iters < 0) throw std::invalid_argument("StochasticConfig: max_iters must be >= 0");
    if (cost_eval_every < 1)
      throw std::invalid_argument("StochasticConfig: cost_eval_every must be >= 1");
    if (plateau_window < 1)
      throw std::invalid_argument("StochasticConfig: plateau_window must be >= 1");
  }

  std::string digest_string() const {
    std::ostringstream os;
    os << "m=" << m << ";policy=" << policy.label() << ";iters=" << max_iters
       << ";seed=" << seed << ";every=" << cost_eval_every << ";eps=" << plateau_eps
       << ";window=" << plateau_window;
    return os.str();
  }
};

struct TraceRow {
  std::int64_t t = 0;
  double phi = std::numeric_limits<double>::quiet_NaN();    // NaN when not evaluated
  double delta = std::numeric_limits<double>::quiet_NaN();  // NaN when absent
  std::vector<std::int64_t> nhat;
  double eta_min = std::numeric_limits<double>::quiet_NaN();
  double eta_max = std::numeric_limits<double>::quiet_NaN();
};

struct RunTrace {
  std::vector<TraceRow> rows;  // one row per executed iteration, t = 1..
  double initial_phi = std::numeric_limits<double>::quiet_NaN();
  double initial_delta = std::numeric_limits<double>::quiet_NaN();
  std::uint64_t seed = 0;
  std::string config_digest;
  std::string stop_reason;
};

// Applies one convex update from an explicit batch (sample point indices).
// Assignment uses the same nearest-active-center rule as assign().
inline BatchStats apply_batch(const Dataset& ds, Centroids& c,
                              std::span<const std::int64_t> samples,
                              PolicyState& state, std::int64_t t) {
  const int k = c.k();
  const std::vector<double> sqn = detail::center_squared_norms(c);
  std::vector<std::vector<double>> sums(static_cast<std::size_t>(k),
                                        std::vector<double>(static_cast<std::size_t>(ds.dim()), 0.0));
  BatchStats stats;
  stats.nhat.assign(static_cast<std::size_t>(k), 0);

  for (const std::int64_t idx : samples) {
    const Point& p = ds.point(idx);
    int best = -1;
    double best_d = std::numeric_limits<double>::infinity();
    for (int r = 0; r < k; ++r) {
      if (!c.is_active(r)) continue;
      const double d = detail::dist2(p, c.centers[static_cast<std::size_t>(r)],
                                     sqn[static_cast<std::size_t>(r)]);
      if (d < best_d) {
        best_d = d;
        best = r;
      }
    }
    if (best < 0) throw std::invalid_argument("apply_batch: all centers inactive");
    p.add_to(sums[static_cast<std::size_t>(best)]);
    ++stats.nhat[static_cast<std::size_t>(best)];
  }

  for (int r = 0; r < k; ++r) {
    const std::int64_t nh = stats.nhat[static_cast<std::size_t>(r)];
    if (nh == 0) continue;  // unsampled clusters are untouched, bit for bit
    const double eta = state.rate(r, nh, t);
    auto& center = c.centers[static_cast<std::size_t>(r)];
    const auto& sum = sums[static_cast<std::size_t>(r)];
    const double inv = 1.0 / static_cast<double>(nh);
    for (std::size_t j = 0; j < center.size(); ++j) {
      const double chat = sum[j] * inv;
      center[j] = (1.0 - eta) * center[j] + eta * chat;
    }
    ++stats.updated_clusters;
    if (std::isnan(stats.eta_min) || eta < stats.eta_min) stats.eta_min = eta;
    if (std::isnan(stats.eta_max) || eta > stats.eta_max) stats.eta_max = eta;
  }
  return stats;
}

// One iteration: draw m indices uniformly with replacement (each draw an
// independent uniform index, in order) and apply the batch.
inline BatchStats step(const Dataset& ds, Centroids& c, const StochasticConfig& cfg,
                       PolicyState& state, std::int64_t t, Rng& rng) {
  std::vector<std::int64_t> samples(static_cast<std::size_t>(cfg.m));
  for (auto& s : samples) s = rng.next_index(ds.size());
  return apply_batch(ds, c, samples, state, t);
}

// Full run: max_iters steps, full-cost evaluation every cost_eval_every
// iterations (instrumentation, not part of the update), optional Delta
// tracking against a reference solution, and an optional plateau stop
// (relative cost improvement < eps across a window of evaluations).
inline std::pair<Centroids, RunTrace> run(const Dataset& ds, const Centroids& c0,
                                          const StochasticConfig& cfg) {
  cfg.validate();
  if (c0.dim() != ds.dim())
    throw std::invalid_argument("run: centroid dimension != dataset dimension");
  Centroids c = c0;
  PolicyState state(cfg.policy, c0.k());
  Rng rng(cfg.seed);

  RunTrace trace;
  trace.seed = cfg.seed;
  trace.config_digest = hex64(fnv1a64(cfg.digest_string()));
  trace.stop_reason = "max_iters";
  trace.initial_phi = voronoi_cost(ds, c);
  if (cfg.reference)
    trace.initial_delta =
        delta(c, cfg.reference->centroids, cfg.reference->weights).value;

  std::vector<double> evals;
  for (std::int64_t t = 1; t <= cfg.max_iters; ++t) {
    BatchStats stats = step(ds, c, cfg, state, t, rng);
    TraceRow row;
    row.t = t;
    row.nhat = std::move(stats.nhat);
    row.eta_min = stats.eta_min;
    row.eta_max = stats.eta_max;
    if (t % cfg.cost_eval_every == 0) {
      row.phi = voronoi_cost(ds, c);
      if (cfg.reference)
        row.delta = delta(c, cfg.reference->centroids, cfg.reference->weights).value;
      evals.push_back(row.phi);
    }
    trace.rows.push_back(std::move(row));

    if (cfg.plateau_eps > 0.0 &&
        static_cast<int>(evals.size()) > cfg.plateau_window) {
      const double before = evals[evals.size() - 1 - static_cast<std::size_t>(cfg.plateau_window)];
      const double now = evals.back();
      if (before - now < cfg.plateau_eps * std::max(before, 1e-300)) {
        trace.stop_reason = "cost_plateau";
        break;
      }
    }
  }
  return {std::move(c), std::move(trace)};
}

// p_r(m) = 1 - (1 - n_r/n)^m: the probability that a cluster holding n_r
// of n points receives at least one of m uniform draws.
inline double update_probability(std::int64_t n_r, std::int64_t n, std::int64_t m) {
  if (n < 1 || n_r < 0 || n_r > n || m < 1)
    throw std::invalid_argument("update_probability: need 0 <= n_r <= n, n >= 1, m >= 1");
  const double q = 1.0 - static_cast<double>(n_r) / static_cast<double>(n);
  if (m > 64) return 1.0 - std::pow(q, static_cast<double>(m));
  double qm = 1.0;  // exact repeated product at desk-scale m
  for (std::int64_t i = 0; i < m; ++i) qm *= q;
  return 1.0 - qm;
}

// ---------------------------------------------------------------------------
// BBS running-average equivalence harness

struct ScriptedBatch {
  // (scripted cluster id, sample coordinates)
  std::vector<std::pair<int, std::vector<double>>> samples;
};

// Replays a scripted sample sequence through the BBS update and compares
// each center against the plain average of everything ever assigned to
// it. Valid only while cluster membership is fixed: every sample must be
// nearest to its scripted center at the moment it is applied.
inline double verify_bbs_running_average(const Centroids& c0,
                                         std::span<const ScriptedBatch> batches) {
  Centroids c = c0;
  const int k = c.k();
  PolicyState state(RatePolicy::bbs(), k);
  std::vector<std::vector<double>> sums(static_cast<std::size_t>(k),
                                        std::vector<double>(static_cast<std::size_t>(c.dim()), 0.0));
  std::vector<std::int64_t> counts(static_cast<std::size_t>(k), 0);

  std::int64_t t = 0;
  for (const auto& batch : batches) {
    ++t;
    std::vector<std::vector<double>> batch_sums(static_cast<std::size_t>(k),
                                                std::vector<double>(static_cast<std::size_t>(c.dim()), 0.0));
    std::vector<std::int64_t> nhat(static_cast<std::size_t>(k), 0);
    for (const auto& [r, x] : batch.samples) {
      if (r < 0 || r >= k)
        throw std::invalid_argument("verify_bbs_running_average: bad scripted cluster id");
      // fixed-membership requirement
      double best_d = std::numeric_limits<double>::infinity();
      int best = -1;
      for (int s = 0; s < k; ++s) {
        if (!c.is_active(s)) continue;
        double d = 0.0;
        for (std::size_t j = 0; j < x.size(); ++j) {
          const double diff = x[j] - c.centers[static_cast<std::size_t>(s)][j];
          d += diff * diff;
        }
        if (d < best_d) {
          best_d = d;
          best = s;
        }
      }
      if (best != r)
        throw std::invalid_argument(
            "verify_bbs_running_average: scripted sequence violates fixed membership "
            "(a sample is nearer to center " + std::to_string(best) +
            " than to scripted center " + std::to_string(r) + ")");
      for (std::size_t j = 0; j < x.size(); ++j) {
        batch_sums[static_cast<std::size_t>(r)][j] += x[j];
        sums[static_cast<std::size_t>(r)][j] += x[j];
      }
      ++nhat[static_cast<std::size_t>(r)];
      ++counts[static_cast<std::size_t>(r)];
    }
    for (int r = 0; r < k; ++r) {
      const std::int64_t nh = nhat[static_cast<std::size_t>(r)];
      if (nh == 0) continue;
      const double eta = state.rate(r, nh, t);
      const double inv = 1.0 / static_cast<double>(nh);
      auto& center = c.centers[static_cast<std::size_t>(r)];
      for (std::size_t j = 0; j < center.size(); ++j)
        center[j] = (1.0 - eta) * center[j] + eta * batch_sums[static_cast<std::size_t>(r)][j] * inv;
    }
  }

  double max_residual = 0.0;
  for (int r = 0; r < k; ++r) {
    if (counts[static_cast<std::size_t>(r)] == 0) continue;
    double d2 = 0.0;
    const double inv = 1.0 / static_cast<double>(counts[static_cast<std::size_t>(r)]);
    for (std::size_t j = 0; j < c.centers[static_cast<std::size_t>(r)].size(); ++j) {
      const double diff =
          c.centers[static_cast<std::size_t>(r)][j] - sums[static_cast<std::size_t>(r)][j] * inv;
      d2 += diff * diff;
    }
    max_residual = std::max(max_residual, std::sqrt(d2));
  }
  return max_residual;
}

// ---------------------------------------------------------------------------
// Trace CSV: header t,phi,delta,updated_clusters,eta_min,eta_max; missing
// values render as empty fields.

inline void write_trace_csv(const RunTrace& trace, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw io_error("cannot open file for writing: " + path);
  out << "t,phi,delta,updated_clusters,eta_min,eta_max\n";
  for (const auto& row : trace.rows) {
    out << row.t << ',';
    if (std::isfinite(row.phi)) out << detail::format_double(row.phi);
    out << ',';
    if (std::isfinite(row.delta)) out << detail::format_double(row.delta);
    out << ',';
    int updated = 0;
    for (auto nh : row.nhat) updated += (nh > 0);
    out << updated << ',';
    if (std::isfinite(row.eta_min)) out << detail::format_double(row.eta_min);
    out << ',';
    if (std::isfinite(row.eta_max)) out << detail::format_double(row.eta_max);
    out << '\n';
  }
  if (!out) throw io_error("write failed: " + path);
}

}  // namespace kmlab
