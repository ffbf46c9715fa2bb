#pragma once
// Runnable diagnostics for the geometric conditions behind the
// convergence guarantees: pairwise projection margins, the mean
// mean-separation / margin / balance checks, an empirical stability
// probe around stationary points, the rate constants beta and rho(m), the
// recurrence envelope used to overlay theoretical decay on measured
// traces, and the log-log slope fit for convergence-rate estimation.
//
// Quantities that depend on the algorithm's own trajectory or on global
// enumeration (the noise bound entering the rate constants, the smallest
// basin radius over all stationary points, and the lower bound on c' they
// induce) are not computable from data and have no operation here; the
// stability probe and the micro-scale enumeration are the observable
// stand-ins.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "kmlab/core.hpp"
#include "kmlab/delta.hpp"
#include "kmlab/lloyd.hpp"
#include "kmlab/rng.hpp"
#include "kmlab/stochastic.hpp"

namespace kmlab {

// Margin between clusters r and s: project every member of both clusters
// onto the line joining the two centers and take the minimum absolute
// difference of the projected distances. A point on the bisector
// contributes zero.
inline double margin(const Dataset& ds, const Clustering& a, const Centroids& c,
                     int r, int s) {
  if (r == s) throw std::invalid_argument("margin: r and s must differ");
  if (a.size_of(r) == 0 || a.size_of(s) == 0)
    throw std::invalid_argument("margin: both clusters must be nonempty");
  const auto& cr = c.centers[static_cast<std::size_t>(r)];
  const auto& cs = c.centers[static_cast<std::size_t>(s)];
  double axis_norm2 = 0.0;
  std::vector<double> axis(cr.size());
  for (std::size_t j = 0; j < cr.size(); ++j) {
    axis[j] = cs[j] - cr[j];
    axis_norm2 += axis[j] * axis[j];
  }
  if (axis_norm2 == 0.0)
    throw std::invalid_argument("margin: coincident centers, projection line undefined");
  const double axis_norm = std::sqrt(axis_norm2);

  double cr_proj = 0.0;  // projection coordinate of c_r along the axis
  for (std::size_t j = 0; j < cr.size(); ++j) cr_proj += cr[j] * axis[j];
  cr_proj /= axis_norm;
  const double cs_proj = cr_proj + axis_norm;

  double best = std::numeric_limits<double>::infinity();
  for (std::int64_t i = 0; i < ds.size(); ++i) {
    const int ci = a.assignment[static_cast<std::size_t>(i)];
    if (ci != r && ci != s) continue;
    const double proj = ds.point(i).dot(axis) / axis_norm;
    const double diff = std::abs(std::abs(proj - cr_proj) - std::abs(proj - cs_proj));
    best = std::min(best, diff);
  }
  return best;
}

struct AssumptionReport {
  double phi_opt = 0.0;
  double f_achieved = 0.0;       // min over pairs of the separation ratio
  double f_required = 0.0;       // max{64^2, (5a+5)/(256a), max n_r/n_s}
  double gamma_achieved = 0.0;   // min over pairs of margin / center distance
  double gamma_required = 0.0;   // 8*sqrt(2)/sqrt(f_achieved)
  double p_min = 0.0;            // min_r n_r / n
  double alpha = 0.0;
  bool b1_vacuous = false;       // phi_opt == 0: separation infinite
  bool b1_holds = false;
  bool b2_holds = false;
  bool b3_holds = false;
};

// Evaluates the three clusterability conditions for a candidate optimal
// clustering, using the instance's own achieved constants f and gamma:
// b1 = mean separation, b2 = margin existence, b3 = cluster balance.
inline AssumptionReport check_assumptions(const Dataset& ds, const Clustering& aopt,
                                          const Centroids& copt, double alpha) {
  if (alpha <= 0.0 || alpha > 1.0)
    throw std::invalid_argument("check_assumptions: alpha must be in (0, 1]");
  if (aopt.k != copt.k())
    throw std::invalid_argument("check_assumptions: clustering/centroid k mismatch");
  const int k = copt.k();
  for (int r = 0; r < k; ++r)
    if (aopt.size_of(r) == 0)
      throw std::invalid_argument("check_assumptions: empty cluster " + std::to_string(r));

  AssumptionReport rep;
  rep.alpha = alpha;
  rep.phi_opt = cost(ds, copt, aopt).total;
  rep.p_min = std::numeric_limits<double>::infinity();
  for (int r = 0; r < k; ++r)
    rep.p_min = std::min(rep.p_min,
                         static_cast<double>(aopt.size_of(r)) / static_cast<double>(ds.size()));

  double balance = 1.0;
  for (int r = 0; r < k; ++r)
    for (int s = 0; s < k; ++s)
      if (r != s)
        balance = std::max(balance, static_cast<double>(aopt.size_of(r)) /
                                        static_cast<double>(aopt.size_of(s)));
  rep.f_required = std::max({64.0 * 64.0, (5.0 * alpha + 5.0) / (256.0 * alpha), balance});

  rep.f_achieved = std::numeric_limits<double>::infinity();
  rep.gamma_achieved = (k > 1) ? std::numeric_limits<double>::infinity() : 0.0;
  const double sqrt_phi = std::sqrt(rep.phi_opt);
  for (int r = 0; r < k; ++r) {
    for (int s = r + 1; s < k; ++s) {
      const double dist = std::sqrt(detail::center_dist2(
          copt.centers[static_cast<std::size_t>(r)], copt.centers[static_cast<std::size_t>(s)]));
      const double inv_sizes = 1.0 / std::sqrt(static_cast<double>(aopt.size_of(r))) +
                               1.0 / std::sqrt(static_cast<double>(aopt.size_of(s)));
      if (rep.phi_opt > 0.0)
        rep.f_achieved = std::min(rep.f_achieved, dist / (sqrt_phi * inv_sizes));
      if (dist > 0.0)
        rep.gamma_achieved =
            std::min(rep.gamma_achieved, margin(ds, aopt, copt, r, s) / dist);
    }
  }
  if (k == 1) rep.f_achieved = std::numeric_limits<double>::infinity();

  rep.b1_vacuous = (rep.phi_opt == 0.0);
  rep.b1_holds = rep.b1_vacuous || rep.f_achieved > rep.f_required;
  rep.gamma_required =
      std::isinf(rep.f_achieved) ? 0.0 : 8.0 * std::sqrt(2.0) / std::sqrt(rep.f_achieved);
  rep.b2_holds = rep.gamma_achieved > rep.gamma_required;
  const double b3_threshold =
      (std::isinf(rep.f_achieved) ? 0.0 : rep.gamma_achieved / (256.0 * rep.f_achieved)) +
      std::sqrt(alpha);
  rep.b3_holds = rep.p_min >= b3_threshold;
  return rep;
}

inline std::string to_key_value(const AssumptionReport& r) {
  std::ostringstream os;
  os << "phi_opt = " << detail::format_double(r.phi_opt) << '\n'
     << "f_achieved = " << detail::format_double(r.f_achieved) << '\n'
     << "f_required = " << detail::format_double(r.f_required) << '\n'
     << "gamma_achieved = " << detail::format_double(r.gamma_achieved) << '\n'
     << "gamma_required = " << detail::format_double(r.gamma_required) << '\n'
     << "p_min = " << detail::format_double(r.p_min) << '\n'
     << "alpha = " << detail::format_double(r.alpha) << '\n'
     << "b1_vacuous = " << (r.b1_vacuous ? 1 : 0) << '\n'
     << "b1_holds = " << (r.b1_holds ? 1 : 0) << '\n'
     << "b2_holds = " << (r.b2_holds ? 1 : 0) << '\n'
     << "b3_holds = " << (r.b3_holds ? 1 : 0) << '\n';
  return os.str();
}

struct StabilityTrial {
  double b_prime = 0.0;         // Delta(C, C*) / phi*
  double sym_diff_ratio = 0.0;  // max_r |A_pi(r) xor A*_r| / n*_r
  double post_step_b = 0.0;     // Delta(C1, C*) / phi* after one batch step
  double post_step_ratio = 0.0; // Delta(C1, C*) / (b' phi*)
  double phi_ratio = 0.0;       // phi(C) / phi*
  bool stability_holds = false;
};

struct StabilityReport {
  double b0 = 0.0;
  double phi_star = 0.0;
  double alpha_estimate = 0.0;  // max over trials of post_step_ratio
  double basin_radius_bound = 0.0;        // gamma^2 f^2 / 16^2 from the instance's constants
  std::vector<StabilityTrial> trials;
};

// Empirical stability probe around a stationary point: draws random
// solutions at prescribed Delta-radius b' phi* (b' uniform in (0, b0],
// plus one forced trial at b' = 0), applies one batch k-means step, and
// records the contraction ratio and the cluster symmetric differences
// under the Delta-achieving permutation. stability_holds checks the stability
// inequality with b set to the observed post-step Delta ratio.
inline StabilityReport stability_probe(const Dataset& ds, const Clustering& astar,
                                       const Centroids& cstar, double b0, int trials,
                                       Rng& rng) {
  if (b0 <= 0.0) throw std::invalid_argument("stability_probe: b0 must be positive");
  if (trials < 1) throw std::invalid_argument("stability_probe: trials must be >= 1");
  const double phi_star = cost(ds, cstar, astar).total;
  if (phi_star <= 0.0) throw std::invalid_argument("stability_probe: phi* must be positive");
  const int k = cstar.k();

  StabilityReport rep;
  rep.b0 = b0;
  rep.phi_star = phi_star;

  {  // basin radius implied by the instance's separation constants
    AssumptionReport ar = check_assumptions(ds, astar, cstar, 0.5);
    if (std::isfinite(ar.f_achieved))
      rep.basin_radius_bound = ar.gamma_achieved * ar.gamma_achieved * ar.f_achieved * ar.f_achieved / 256.0;
    else
      rep.basin_radius_bound = std::numeric_limits<double>::infinity();
  }

  for (int trial = 0; trial <= trials; ++trial) {
    const double b_prime = (trial == 0) ? 0.0 : rng.next_unit() * b0;
    Centroids c = cstar;
    if (b_prime > 0.0) {
      std::vector<std::vector<double>> dirs;
      double total = 0.0;
      for (int r = 0; r < k; ++r) {
        std::vector<double> g = rng.next_gaussian_vector(ds.dim());
        double norm2 = 0.0;
        for (double v : g) norm2 += v * v;
        total += static_cast<double>(astar.size_of(r)) * norm2;
        dirs.push_back(std::move(g));
      }
      const double scale = std::sqrt(b_prime * phi_star / total);
      for (int r = 0; r < k; ++r)
        for (std::size_t j = 0; j < dirs[static_cast<std::size_t>(r)].size(); ++j)
          c.centers[static_cast<std::size_t>(r)][j] +=
              scale * dirs[static_cast<std::size_t>(r)][j];
    }

    StabilityTrial t;
    t.b_prime = b_prime;
    const DeltaResult dr = delta(c, cstar, astar.sizes, DeltaMode::exact);
    const AssignResult ar = assign(ds, c);
    t.phi_ratio = cost(ds, c, ar.clustering).total / phi_star;

    // symmetric difference per cluster under the Delta-achieving permutation
    double max_ratio = 0.0;
    for (int r = 0; r < k; ++r) {
      const int src = dr.permutation[static_cast<std::size_t>(r)];
      std::int64_t sym = 0;
      for (std::int64_t i = 0; i < ds.size(); ++i) {
        const bool in_star = astar.assignment[static_cast<std::size_t>(i)] == r;
        const bool in_new = ar.clustering.assignment[static_cast<std::size_t>(i)] == src;
        if (in_star != in_new) ++sym;
      }
      max_ratio = std::max(max_ratio, static_cast<double>(sym) /
                                          static_cast<double>(astar.size_of(r)));
    }
    t.sym_diff_ratio = max_ratio;

    // one batch k-means step from C
    Centroids c1 = means(ds, ar.clustering);
    for (int r = 0; r < c1.k(); ++r)
      if (!c1.is_active(r))
        c1.centers[static_cast<std::size_t>(r)] = c.centers[static_cast<std::size_t>(r)];
    const double post_delta = delta(c1, cstar, astar.sizes, DeltaMode::exact).value;
    t.post_step_b = post_delta / phi_star;
    t.post_step_ratio = (b_prime > 0.0) ? post_delta / (b_prime * phi_star) : 0.0;

    const double b = t.post_step_b;
    const double bound = b / (5.0 * b + 4.0 * (1.0 + t.phi_ratio));
    t.stability_holds = t.sym_diff_ratio <= bound + 1e-12;

    if (trial > 0) rep.alpha_estimate = std::max(rep.alpha_estimate, t.post_step_ratio);
    rep.trials.push_back(std::move(t));
  }
  return rep;
}

inline std::string to_key_value(const StabilityReport& r) {
  std::ostringstream os;
  os << "b0 = " << detail::format_double(r.b0) << '\n'
     << "phi_star = " << detail::format_double(r.phi_star) << '\n'
     << "alpha_estimate = " << detail::format_double(r.alpha_estimate) << '\n'
     << "basin_radius_bound = " << detail::format_double(r.basin_radius_bound) << '\n'
     << "trials = " << r.trials.size() << '\n';
  int failures = 0;
  for (const auto& t : r.trials) failures += (t.stability_holds ? 0 : 1);
  os << "stability_failures = " << failures << '\n';
  return os.str();
}

inline void write_stability_csv(const StabilityReport& rep, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw io_error("cannot open file for writing: " + path);
  out << "b_prime,sym_diff_ratio,post_step_b,post_step_ratio,phi_ratio,stability_holds\n";
  for (const auto& t : rep.trials)
    out << detail::format_double(t.b_prime) << ',' << detail::format_double(t.sym_diff_ratio)
        << ',' << detail::format_double(t.post_step_b) << ','
        << detail::format_double(t.post_step_ratio) << ',' << detail::format_double(t.phi_ratio)
        << ',' << (t.stability_holds ? 1 : 0) << '\n';
  if (!out) throw io_error("write failed: " + path);
}

// beta = 2 c' * min_{r,t} p_r^t(m) * (1 - max_t a^t sqrt(alpha)); local
// convergence needs beta > 1.
inline double beta_value(double c_prime, double p_min_over_t, double a_max_ratio,
                         double alpha) {
  if (c_prime <= 0.0 || p_min_over_t <= 0.0 || p_min_over_t > 1.0 || a_max_ratio < 1.0 ||
      alpha < 0.0 || alpha >= 1.0)
    throw std::invalid_argument("beta_value: inputs out of range");
  return 2.0 * c_prime * p_min_over_t * (1.0 - a_max_ratio * std::sqrt(alpha));
}

struct BoundParams {
  double a = 2.0;    // must be > 1 for the closed form
  double b = 0.0;
  double t0 = 0.0;
  double u_t0 = 0.0;
};

// Closed-form envelope for sequences with u_t <= (1 - a/t) u_{t-1} + b/t^2:
//   u_t <= ((t0+1)/(t+1))^a u_{t0} + (b/(a-1)) (1 + 1/(t0+1))^{a+1} / (t+1).
inline double recurrence_envelope(const BoundParams& p, double t) {
  if (p.a <= 1.0) throw std::invalid_argument("recurrence_envelope: requires a > 1");
  if (t < p.t0) throw std::invalid_argument("recurrence_envelope: requires t >= t0");
  const double first = std::pow((p.t0 + 1.0) / (t + 1.0), p.a) * p.u_t0;
  const double second =
      p.b / (p.a - 1.0) * std::pow(1.0 + 1.0 / (p.t0 + 1.0), p.a + 1.0) / (t + 1.0);
  return first + second;
}

struct SlopeFit {
  double slope = 0.0;
  double r2 = 0.0;
  int points_used = 0;
};

struct FitWindow {
  // [t_lo, t_hi] inclusive; both -1 selects the second half of the series.
  std::int64_t t_lo = -1;
  std::int64_t t_hi = -1;
};

// Least-squares fit of log(phi^t - floor) against log t. Points at or
// below the floor (within 1e-12 of the initial cost) are excluded: so
// close to the floor estimate the difference is noise, not signal.
inline SlopeFit fit_loglog_slope(std::span<const double> ts, std::span<const double> values,
                                 std::optional<double> floor_opt = std::nullopt,
                                 FitWindow window = {}) {
  if (ts.size() != values.size())
    throw std::invalid_argument("fit_loglog_slope: length mismatch");
  std::vector<std::pair<double, double>> series;
  for (std::size_t i = 0; i < ts.size(); ++i)
    if (std::isfinite(values[i])) series.emplace_back(ts[i], values[i]);
  if (series.size() < 2) throw std::invalid_argument("fit_loglog_slope: fewer than 2 usable points");

  double floor_value;
  if (floor_opt) {
    floor_value = *floor_opt;
  } else {
    floor_value = series.front().second;
    for (const auto& [t, v] : series) floor_value = std::min(floor_value, v);
  }
  const double phi0 = series.front().second;

  std::int64_t t_lo = window.t_lo, t_hi = window.t_hi;
  if (t_lo < 0 && t_hi < 0) {
    const double t_max = series.back().first;
    t_lo = static_cast<std::int64_t>(t_max / 2) + 1;
    t_hi = static_cast<std::int64_t>(t_max);
  }

  double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0, syy = 0.0;
  int n = 0;
  for (const auto& [t, v] : series) {
    if (t < static_cast<double>(t_lo) || t > static_cast<double>(t_hi) || t <= 0.0) continue;
    const double excess = v - floor_value;
    if (excess <= 0.0 || excess <= 1e-12 * phi0) continue;
    const double x = std::log(t);
    const double y = std::log(excess);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
    syy += y * y;
    ++n;
  }
  if (n < 2) throw std::invalid_argument("fit_loglog_slope: fewer than 2 usable points");

  const double ss_xx = sxx - sx * sx / n;
  const double ss_yy = syy - sy * sy / n;
  const double ss_xy = sxy - sx * sy / n;
  if (ss_xx <= 0.0) throw std::invalid_argument("fit_loglog_slope: degenerate abscissa");
  SlopeFit fit;
  fit.slope = ss_xy / ss_xx;
  fit.r2 = (ss_yy > 0.0) ? (ss_xy * ss_xy) / (ss_xx * ss_yy) : 1.0;
  fit.points_used = n;
  return fit;
}

// Convenience overload on a run trace: fits the evaluated phi entries.
inline SlopeFit slope_estimate(const RunTrace& trace,
                               std::optional<double> floor_opt = std::nullopt,
                               FitWindow window = {}) {
  std::vector<double> ts, phis;
  for (const auto& row : trace.rows) {
    if (!std::isfinite(row.phi)) continue;
    ts.push_back(static_cast<double>(row.t));
    phis.push_back(row.phi);
  }
  return fit_loglog_slope(ts, phis, floor_opt, window);
}

}  // namespace kmlab
