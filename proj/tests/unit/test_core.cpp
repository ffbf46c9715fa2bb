#include <catch2/catch_amalgamated.hpp>

#include "helpers.hpp"
#include "kmlab/core.hpp"

#include <filesystem>

using namespace kmlab;

TEST_CASE("assign basics", "[core]") {
  Dataset ds = testutil::dataset_1d({0.0, 10.0});
  Centroids c({{0.0}, {10.0}});
  AssignResult ar = assign(ds, c);
  REQUIRE(ar.clustering.assignment == std::vector<int>{0, 1});
  REQUIRE_FALSE(ar.boundary_hit);

  SECTION("exact bisector goes to the lowest index and flags the boundary") {
    Dataset mid = testutil::dataset_1d({5.0});
    AssignResult r = assign(mid, c);
    REQUIRE(r.clustering.assignment == std::vector<int>{0});
    REQUIRE(r.boundary_hit);
  }

  SECTION("boundary tolerance widens the detector") {
    Dataset near = testutil::dataset_1d({5.2});
    REQUIRE_FALSE(assign(near, c).boundary_hit);
    REQUIRE(assign(near, c, 0.5).boundary_hit);
  }

  SECTION("inactive centers receive no points") {
    Centroids partial({{0.0}, {10.0}}, {0, 1});
    AssignResult r = assign(ds, partial);
    REQUIRE(r.clustering.assignment == std::vector<int>{1, 1});
    REQUIRE(r.clustering.sizes[0] == 0);
  }

  SECTION("all centers inactive is an error") {
    Centroids dead({{0.0}, {10.0}}, {0, 0});
    REQUIRE_THROWS_AS(assign(ds, dead), std::invalid_argument);
  }
}

TEST_CASE("assign matches the brute-force distance matrix", "[core]") {
  Rng rng(101);
  for (int rep = 0; rep < 20; ++rep) {
    Dataset ds = testutil::dense_dataset(testutil::random_rows(rng, 6, 3));
    Centroids c(testutil::random_rows(rng, 3, 3));
    AssignResult ar = assign(ds, c);
    REQUIRE(ar.clustering.assignment == testutil::brute_force_assign(ds, c));
  }
}

TEST_CASE("means", "[core]") {
  Dataset ds = testutil::dense_dataset({{0.0, 0.0}, {2.0, 0.0}});
  Clustering a({0, 0}, 2);
  Centroids m = means(ds, a);
  REQUIRE(m.centers[0] == std::vector<double>{1.0, 0.0});
  REQUIRE(m.is_active(0));
  REQUIRE_FALSE(m.is_active(1));  // empty cluster flagged inactive

  SECTION("mean equals an independently accumulated sum") {
    Rng rng(7);
    auto rows = testutil::random_rows(rng, 5, 4);
    Dataset rds = testutil::dense_dataset(rows);
    Clustering all({0, 0, 0, 0, 0}, 1);
    Centroids rm = means(rds, all);
    for (int j = 0; j < 4; ++j) {
      // reverse-order accumulation as the independent route
      double s = 0.0;
      for (int i = 4; i >= 0; --i) s += rows[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
      REQUIRE_THAT(rm.centers[0][static_cast<std::size_t>(j)],
                   Catch::Matchers::WithinRel(s / 5.0, 1e-12));
    }
  }
}

TEST_CASE("cost", "[core]") {
  Dataset origin = testutil::dense_dataset({{0.0, 0.0}});
  Centroids c({{3.0, 4.0}});
  Clustering a({0}, 1);
  REQUIRE_THAT(cost(origin, c, a).total, Catch::Matchers::WithinAbs(25.0, 1e-12));

  SECTION("per-cluster totals sum to the overall cost") {
    Rng rng(13);
    Dataset ds = testutil::dense_dataset(testutil::random_rows(rng, 40, 3));
    Centroids cc(testutil::random_rows(rng, 4, 3));
    AssignResult ar = assign(ds, cc);
    CostReport rep = cost(ds, cc, ar.clustering);
    double sum = 0.0;
    for (double v : rep.per_cluster) sum += v;
    REQUIRE_THAT(rep.total, Catch::Matchers::WithinRel(sum, 1e-9));
  }

  SECTION("mean optimality: means beat 20 random centers") {
    Rng rng(29);
    Dataset ds = testutil::dense_dataset(testutil::random_rows(rng, 25, 3));
    std::vector<int> raw(25);
    for (auto& v : raw) v = static_cast<int>(rng.next_index(3));
    Clustering part(raw, 3);
    Centroids best = means(ds, part);
    const double phi_best = cost(ds, best, part).total;
    for (int trial = 0; trial < 20; ++trial) {
      Centroids alt(testutil::random_rows(rng, 3, 3));
      REQUIRE(phi_best <= cost(ds, alt, part).total);
    }
  }

  SECTION("expanded cost matches the naive oracle on a fixed fixture") {
    Rng rng(31);
    Dataset ds = testutil::dense_dataset(testutil::random_rows(rng, 8, 5));
    Centroids cc(testutil::random_rows(rng, 3, 5));
    AssignResult ar = assign(ds, cc);
    const double expanded = cost(ds, cc, ar.clustering).total;
    const double naive = testutil::naive_cost(ds, cc, ar.clustering.assignment);
    REQUIRE_THAT(expanded, Catch::Matchers::WithinRel(naive, 1e-9));
    REQUIRE_THAT(cost(ds, cc, ar.clustering, CostMode::naive).total,
                 Catch::Matchers::WithinRel(naive, 1e-12));
  }
}

TEST_CASE("assign minimizes cost over all partitions (exhaustive)", "[core]") {
  Rng rng(37);
  const std::int64_t n = 7;
  const int k = 3;
  Dataset ds = testutil::dense_dataset(testutil::random_rows(rng, n, 2));
  Centroids c(testutil::random_rows(rng, k, 2));
  AssignResult ar = assign(ds, c);
  const double phi_v = cost(ds, c, ar.clustering).total;
  std::vector<int> a(static_cast<std::size_t>(n), 0);
  while (true) {
    REQUIRE(phi_v <= cost(ds, c, Clustering(a, k)).total + 1e-12);
    int i = 0;
    while (i < n && ++a[static_cast<std::size_t>(i)] == k) a[static_cast<std::size_t>(i++)] = 0;
    if (i == n) break;
  }
}

TEST_CASE("centroidal identity", "[core]") {
  SECTION("hand computation") {
    std::vector<std::vector<double>> y = {{0.0, 0.0}, {2.0, 0.0}};
    std::vector<double> c = {0.0, 0.0};
    // phi(c,Y) = 4, phi(m,Y) = 2, |Y| ||m-c||^2 = 2
    REQUIRE_THAT(centroidal_identity_check(y, c), Catch::Matchers::WithinAbs(0.0, 1e-12));
  }
  SECTION("c at the mean") {
    std::vector<std::vector<double>> y = {{1.0, 1.0}, {3.0, 5.0}, {-2.0, 0.0}};
    std::vector<double> m(2, 0.0);
    for (const auto& p : y)
      for (int j = 0; j < 2; ++j) m[static_cast<std::size_t>(j)] += p[static_cast<std::size_t>(j)] / 3.0;
    REQUIRE(centroidal_identity_check(y, m) <= 1e-12);
  }
  SECTION("30 random instances stay within tolerance") {
    Rng rng(41);
    for (int rep = 0; rep < 30; ++rep) {
      const int d = 1 + static_cast<int>(rng.next_index(6));
      const std::int64_t n = 1 + rng.next_index(20);
      auto y = testutil::random_rows(rng, n, d);
      std::vector<double> c(static_cast<std::size_t>(d));
      for (auto& v : c) v = 10.0 * rng.next_gaussian();
      double phi_c = 0.0;
      for (const auto& p : y) phi_c += testutil::dist2(p, c);
      REQUIRE(centroidal_identity_check(y, c) <= 1e-9 * std::max(1.0, phi_c));
    }
  }
}

TEST_CASE("solution serialization round-trips", "[core]") {
  namespace fs = std::filesystem;
  const std::string cpath = (fs::temp_directory_path() / "kmlab_centroids.csv").string();
  Centroids c({{1.5, -2.25}, {0.0, 1e-17}, {3.0, 4.0}}, {1, 0, 1});
  write_centroids_csv(c, cpath);
  Centroids back = load_centroids_csv(cpath);
  REQUIRE(back.centers == c.centers);
  REQUIRE(back.active == c.active);

  const std::string apath = (fs::temp_directory_path() / "kmlab_assign.txt").string();
  Clustering a({0, 2, 1, 2, Clustering::kNone}, 3);
  write_assignment(a, apath);
  Clustering aback = load_assignment(apath, 3);
  REQUIRE(aback.assignment == a.assignment);
  REQUIRE(aback.sizes == a.sizes);
}
