#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "helpers.hpp"
#include "kmlab/lloyd.hpp"
#include "kmlab/theory.hpp"

using namespace kmlab;

namespace {

// naive per-point margin oracle: scan both clusters, project explicitly
double margin_oracle(const Dataset& ds, const Clustering& a, const Centroids& c, int r,
                     int s) {
  const auto& cr = c.centers[static_cast<std::size_t>(r)];
  const auto& cs = c.centers[static_cast<std::size_t>(s)];
  std::vector<double> u(cr.size());
  double norm = 0.0;
  for (std::size_t j = 0; j < cr.size(); ++j) {
    u[j] = cs[j] - cr[j];
    norm += u[j] * u[j];
  }
  norm = std::sqrt(norm);
  for (auto& v : u) v /= norm;
  double best = 1e300;
  for (std::int64_t i = 0; i < ds.size(); ++i) {
    const int ci = a.assignment[static_cast<std::size_t>(i)];
    if (ci != r && ci != s) continue;
    const std::vector<double> x = ds.point(i).to_dense(ds.dim());
    double tr = 0.0;
    for (std::size_t j = 0; j < u.size(); ++j) tr += (x[j] - cr[j]) * u[j];
    // projected point distance to each center along the axis
    const double dr = std::abs(tr);
    const double dsq = std::abs(tr - norm);
    best = std::min(best, std::abs(dr - dsq));
  }
  return best;
}

}  // namespace

TEST_CASE("margin", "[theory]") {
  SECTION("two singletons at the centers") {
    Dataset ds = testutil::dense_dataset({{-1.0, 0.0}, {1.0, 0.0}});
    Clustering a({0, 1}, 2);
    Centroids c({{-1.0, 0.0}, {1.0, 0.0}});
    REQUIRE_THAT(margin(ds, a, c, 0, 1), Catch::Matchers::WithinAbs(2.0, 1e-12));
  }

  SECTION("a bisector point contributes zero") {
    Dataset ds = testutil::dense_dataset({{-1.0, 0.0}, {1.0, 0.0}, {0.0, 3.0}});
    Clustering a({0, 1, 0}, 2);
    Centroids c({{-1.0, 0.0}, {1.0, 0.0}});
    REQUIRE_THAT(margin(ds, a, c, 0, 1), Catch::Matchers::WithinAbs(0.0, 1e-12));
  }

  SECTION("coincident centers are rejected") {
    Dataset ds = testutil::dense_dataset({{0.0}, {1.0}});
    Clustering a({0, 1}, 2);
    Centroids c({{0.5}, {0.5}});
    REQUIRE_THROWS_AS(margin(ds, a, c, 0, 1), std::invalid_argument);
  }

  SECTION("matches the per-point oracle and is symmetric") {
    PlantedInstance inst = testutil::planted_fixture(3, 3, 25, 9.0, 1.0, 17);
    Centroids c = means(inst.data, inst.planted);
    for (int r = 0; r < 3; ++r)
      for (int s = r + 1; s < 3; ++s) {
        const double m1 = margin(inst.data, inst.planted, c, r, s);
        const double m2 = margin(inst.data, inst.planted, c, s, r);
        REQUIRE_THAT(m1, Catch::Matchers::WithinRel(
                             margin_oracle(inst.data, inst.planted, c, r, s), 1e-9));
        REQUIRE_THAT(m1, Catch::Matchers::WithinRel(m2, 1e-9));
      }
  }

  SECTION("rigid motions leave the margin unchanged") {
    PlantedInstance inst = testutil::planted_fixture(2, 2, 20, 7.0, 1.0, 23);
    Centroids c = means(inst.data, inst.planted);
    const double base = margin(inst.data, inst.planted, c, 0, 1);

    const double theta = 0.7;
    const double ct = std::cos(theta), st = std::sin(theta);
    const double shift[2] = {3.5, -1.25};
    auto transform = [&](const std::vector<double>& x) {
      return std::vector<double>{ct * x[0] - st * x[1] + shift[0],
                                 st * x[0] + ct * x[1] + shift[1]};
    };
    std::vector<std::vector<double>> rows;
    for (std::int64_t i = 0; i < inst.data.size(); ++i)
      rows.push_back(transform(inst.data.point(i).dense_coords()));
    Dataset moved = testutil::dense_dataset(rows);
    Centroids cm({transform(c.centers[0]), transform(c.centers[1])});
    REQUIRE_THAT(margin(moved, inst.planted, cm, 0, 1),
                 Catch::Matchers::WithinRel(base, 1e-9));
  }
}

TEST_CASE("check_assumptions", "[theory]") {
  SECTION("zero-cost instance is vacuous for B1") {
    Dataset ds = testutil::dense_dataset({{0.0}, {10.0}});
    Clustering a({0, 1}, 2);
    Centroids c({{0.0}, {10.0}});
    AssumptionReport rep = check_assumptions(ds, a, c, 0.5);
    REQUIRE(rep.b1_vacuous);
    REQUIRE(rep.b1_holds);
    REQUIRE(std::isinf(rep.f_achieved));
  }

  SECTION("f_required at alpha = 1 with balanced clusters is 64^2") {
    PlantedInstance inst = testutil::planted_fixture(2, 2, 30, 10.0, 1.0, 29);
    Centroids c = means(inst.data, inst.planted);
    AssumptionReport rep = check_assumptions(inst.data, inst.planted, c, 1.0);
    // max{64^2, (5*1+5)/(256*1), 1} = 4096
    REQUIRE(rep.f_required == 4096.0);
  }

  SECTION("empty cluster is an error") {
    Dataset ds = testutil::dense_dataset({{0.0}, {1.0}});
    Clustering a({0, 0}, 2);
    Centroids c = means(ds, a);
    REQUIRE_THROWS_AS(check_assumptions(ds, a, c, 0.5), std::invalid_argument);
  }

  SECTION("f_achieved matches an independent recomputation") {
    PlantedInstance inst = testutil::planted_fixture(3, 2, 40, 30.0, 0.5, 31);
    Centroids c = means(inst.data, inst.planted);
    AssumptionReport rep = check_assumptions(inst.data, inst.planted, c, 0.01);
    const double phi = cost(inst.data, c, inst.planted).total;
    double f = 1e300;
    for (int r = 0; r < 3; ++r)
      for (int s = r + 1; s < 3; ++s) {
        const double dist = std::sqrt(testutil::dist2(c.centers[static_cast<std::size_t>(r)],
                                                      c.centers[static_cast<std::size_t>(s)]));
        const double denom =
            std::sqrt(phi) * (1.0 / std::sqrt(40.0) + 1.0 / std::sqrt(40.0));
        f = std::min(f, dist / denom);
      }
    REQUIRE_THAT(rep.f_achieved, Catch::Matchers::WithinRel(f, 1e-9));
  }

  SECTION("b1 flips exactly where the recomputed f crosses the threshold") {
    // shrink the within-cluster spread until separation kicks in
    PlantedInstance base = testutil::planted_fixture(3, 2, 40, 30.0, 0.5, 53);
    bool saw_false = false, saw_true = false;
    for (double lambda : {1.0, 0.01, 0.001}) {
      std::vector<std::vector<double>> rows;
      for (std::int64_t i = 0; i < base.data.size(); ++i) {
        const int r = base.planted.assignment[static_cast<std::size_t>(i)];
        const auto& center = base.planted_centers.centers[static_cast<std::size_t>(r)];
        std::vector<double> x = base.data.point(i).dense_coords();
        for (std::size_t j = 0; j < x.size(); ++j)
          x[j] = center[j] + lambda * (x[j] - center[j]);
        rows.push_back(std::move(x));
      }
      Dataset ds = testutil::dense_dataset(rows);
      Centroids c = means(ds, base.planted);
      AssumptionReport rep = check_assumptions(ds, base.planted, c, 0.01);

      // independent recomputation of the separation ratio
      const double phi = testutil::naive_cost(ds, c, base.planted.assignment);
      double f = 1e300;
      for (int r = 0; r < 3; ++r)
        for (int s = r + 1; s < 3; ++s)
          f = std::min(f, std::sqrt(testutil::dist2(c.centers[static_cast<std::size_t>(r)],
                                                    c.centers[static_cast<std::size_t>(s)])) /
                              (std::sqrt(phi) * 2.0 / std::sqrt(40.0)));
      REQUIRE(rep.b1_holds == (f > rep.f_required));
      saw_false = saw_false || !rep.b1_holds;
      saw_true = saw_true || rep.b1_holds;
    }
    REQUIRE(saw_false);
    REQUIRE(saw_true);
  }

  SECTION("shrinking points toward centers never hurts f or gamma") {
    PlantedInstance inst = testutil::planted_fixture(3, 2, 30, 12.0, 2.0, 37);
    double prev_f = 0.0, prev_gamma = 0.0;
    for (double lambda : {1.0, 0.5, 0.25}) {
      std::vector<std::vector<double>> rows;
      for (std::int64_t i = 0; i < inst.data.size(); ++i) {
        const int r = inst.planted.assignment[static_cast<std::size_t>(i)];
        const auto& center = inst.planted_centers.centers[static_cast<std::size_t>(r)];
        std::vector<double> x = inst.data.point(i).dense_coords();
        for (std::size_t j = 0; j < x.size(); ++j)
          x[j] = center[j] + lambda * (x[j] - center[j]);
        rows.push_back(std::move(x));
      }
      Dataset shrunk = testutil::dense_dataset(rows);
      Centroids c = means(shrunk, inst.planted);
      AssumptionReport rep = check_assumptions(shrunk, inst.planted, c, 0.01);
      REQUIRE(rep.f_achieved >= prev_f);
      REQUIRE(rep.gamma_achieved >= prev_gamma);
      prev_f = rep.f_achieved;
      prev_gamma = rep.gamma_achieved;
    }
  }
}

TEST_CASE("stability probe", "[theory]") {
  SECTION("well separated fixture: contraction and stability compliance") {
    PlantedInstance inst = testutil::planted_fixture(3, 2, 40, 40.0, 0.5, 41);
    Centroids cstar = means(inst.data, inst.planted);
    REQUIRE(is_stationary(inst.data, inst.planted).stationary);
    Rng rng(43);
    StabilityReport rep = stability_probe(inst.data, inst.planted, cstar, 0.05, 20, rng);
    REQUIRE(rep.trials.size() == 21);
    // forced trial at b' = 0
    REQUIRE(rep.trials[0].b_prime == 0.0);
    REQUIRE(rep.trials[0].sym_diff_ratio == 0.0);
    REQUIRE(rep.trials[0].post_step_b == 0.0);
    REQUIRE(rep.alpha_estimate < 1.0);
    for (const auto& t : rep.trials) {
      REQUIRE(t.stability_holds);
      // perturbations this deep inside the basin never reassign a point
      REQUIRE(t.sym_diff_ratio == 0.0);
    }
    REQUIRE(rep.basin_radius_bound > 0.0);
  }

  SECTION("merged blobs violate the stability inequality in some trials") {
    // two overlapping blobs: stationary points exist but are not stable
    kmlab::SyntheticSpec spec;
    spec.k = 2;
    spec.dim = 2;
    spec.sizes = {60, 60};
    spec.centers = {{0.0, 0.0}, {1.0, 0.0}};
    spec.radius = 2.0;  // heavy overlap
    spec.seed = 47;
    PlantedInstance inst = generate_clusterable(spec);
    BatchResult res = lloyd_run(inst.data, Centroids({{-0.5, 0.0}, {1.5, 0.0}}), 500);
    REQUIRE(res.stopped_reason == StopReason::stationary);
    Rng rng(53);
    StabilityReport rep = stability_probe(inst.data, res.final_clustering,
                                          res.final_centroids, 0.5, 40, rng);
    int failures = 0;
    for (const auto& t : rep.trials) failures += (t.stability_holds ? 0 : 1);
    REQUIRE(failures > 0);
    const std::string kv = to_key_value(rep);
    REQUIRE(kv.find("stability_failures = " + std::to_string(failures)) != std::string::npos);
  }

  SECTION("nonpositive phi* is rejected") {
    Dataset ds = testutil::dense_dataset({{0.0}, {4.0}});
    Clustering a({0, 1}, 2);
    Centroids c = means(ds, a);
    Rng rng(1);
    REQUIRE_THROWS_AS(stability_probe(ds, a, c, 0.1, 5, rng), std::invalid_argument);
  }
}

TEST_CASE("beta and rho arithmetic", "[theory]") {
  SECTION("alpha = 0 reduces to 2 c' p") {
    REQUIRE(beta_value(3.0, 0.25, 1.0, 0.0) == 1.5);
  }
  SECTION("boundary of the beta > 1 requirement") {
    REQUIRE(beta_value(1.0, 0.5, 1.0, 0.0) == 1.0);
  }
  SECTION("rho(m) composition matches independent arithmetic") {
    const double p_min = 0.2, gamma = 0.8, f = 4096.0;
    const int m = 7;
    const double inner = p_min - gamma / (256.0 * f);
    double pow_term = 1.0;
    for (int i = 0; i < m; ++i) pow_term *= (1.0 - inner);
    const double rho = 1.0 - pow_term;
    // same composition via update_probability-style evaluation
    const double rho_alt = 1.0 - std::pow(1.0 - inner, m);
    REQUIRE_THAT(rho, Catch::Matchers::WithinRel(rho_alt, 1e-12));
    const double beta = beta_value(2.0, rho, 1.0, 0.01);
    REQUIRE_THAT(beta, Catch::Matchers::WithinRel(2.0 * 2.0 * rho * (1.0 - 0.1), 1e-12));
  }
  SECTION("input validation") {
    REQUIRE_THROWS_AS(beta_value(2.0, 0.0, 1.0, 0.0), std::invalid_argument);
    REQUIRE_THROWS_AS(beta_value(2.0, 0.5, 0.9, 0.0), std::invalid_argument);
    REQUIRE_THROWS_AS(beta_value(2.0, 0.5, 1.0, 1.0), std::invalid_argument);
  }
}

TEST_CASE("recurrence envelope", "[theory]") {
  SECTION("substitution at t = t0") {
    BoundParams p{2.0, 1.0, 5.0, 1.0};
    const double expected = 1.0 + (1.0 / 1.0) * std::pow(1.0 + 1.0 / 6.0, 3.0) / 6.0;
    REQUIRE_THAT(recurrence_envelope(p, 5.0), Catch::Matchers::WithinRel(expected, 1e-12));
  }
  SECTION("b = 0 is pure power decay") {
    BoundParams p{3.0, 0.0, 5.0, 2.0};
    REQUIRE_THAT(recurrence_envelope(p, 11.0),
                 Catch::Matchers::WithinRel(std::pow(6.0 / 12.0, 3.0) * 2.0, 1e-12));
  }
  SECTION("a <= 1 is rejected") {
    REQUIRE_THROWS_AS(recurrence_envelope(BoundParams{1.0, 1.0, 5.0, 1.0}, 10.0),
                      std::invalid_argument);
  }
  SECTION("dominates the simulated recurrence") {
    BoundParams p{2.0, 1.0, 5.0, 1.0};
    double u = p.u_t0;
    for (int t = 6; t <= 10000; ++t) {
      u = (1.0 - p.a / t) * u + p.b / (static_cast<double>(t) * t);
      REQUIRE(u <= recurrence_envelope(p, t) * (1.0 + 1e-12));
    }
  }
}

TEST_CASE("slope estimation", "[theory]") {
  SECTION("phi = 1 + 1/t has slope -1 with perfect fit") {
    std::vector<double> ts, vs;
    for (int t = 1; t <= 200; ++t) {
      ts.push_back(t);
      vs.push_back(1.0 + 1.0 / t);
    }
    SlopeFit fit = fit_loglog_slope(ts, vs, 1.0);
    REQUIRE_THAT(fit.slope, Catch::Matchers::WithinAbs(-1.0, 1e-9));
    REQUIRE_THAT(fit.r2, Catch::Matchers::WithinAbs(1.0, 1e-9));
  }
  SECTION("phi = 1 + 1/t^2 has slope -2") {
    std::vector<double> ts, vs;
    for (int t = 1; t <= 200; ++t) {
      ts.push_back(t);
      vs.push_back(1.0 + 1.0 / (static_cast<double>(t) * t));
    }
    SlopeFit fit = fit_loglog_slope(ts, vs, 1.0);
    REQUIRE_THAT(fit.slope, Catch::Matchers::WithinAbs(-2.0, 1e-9));
  }
  SECTION("custom windows restrict the fit") {
    std::vector<double> ts, vs;
    for (int t = 1; t <= 100; ++t) {
      ts.push_back(t);
      vs.push_back(1.0 + (t <= 50 ? 1.0 / t : 1.0 / (static_cast<double>(t) * t)));
    }
    SlopeFit early = fit_loglog_slope(ts, vs, 1.0, FitWindow{2, 50});
    REQUIRE_THAT(early.slope, Catch::Matchers::WithinAbs(-1.0, 1e-6));
  }
  SECTION("the default floor is the series minimum") {
    std::vector<double> ts, vs;
    for (int t = 1; t <= 100; ++t) {
      ts.push_back(t);
      vs.push_back(1.0 + 1.0 / t);
    }
    ts.push_back(101);
    vs.push_back(1.0);  // exact floor point; excluded from the fit
    SlopeFit fit = fit_loglog_slope(ts, vs, std::nullopt, FitWindow{51, 101});
    REQUIRE_THAT(fit.slope, Catch::Matchers::WithinAbs(-1.0, 1e-9));
    REQUIRE(fit.points_used == 50);
  }

  SECTION("fewer than two usable points is an error") {
    std::vector<double> ts{1.0, 2.0}, vs{1.0, 1.0};
    REQUIRE_THROWS_WITH(fit_loglog_slope(ts, vs, 1.0),
                        Catch::Matchers::ContainsSubstring("usable"));
  }
  SECTION("trace overload uses evaluated entries and the default floor") {
    RunTrace trace;
    for (int t = 1; t <= 40; ++t) {
      TraceRow row;
      row.t = t;
      row.phi = 2.0 + 1.0 / t;
      trace.rows.push_back(row);
    }
    SlopeFit fit = slope_estimate(trace, 2.0, FitWindow{1, 40});
    REQUIRE_THAT(fit.slope, Catch::Matchers::WithinAbs(-1.0, 1e-9));
  }
}
