#pragma once
// Command-line front end. Exit codes: 0 success, 1 validation/usage
// errors, 2 I/O errors.

#include <CLI11.hpp>
#include <cstdint>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "kmlab/experiment.hpp"
#include "kmlab/lloyd.hpp"
#include "kmlab/seeding.hpp"
#include "kmlab/stochastic.hpp"
#include "kmlab/theory.hpp"
#include "kmlab/version.hpp"

namespace kmlab {

namespace detail {

struct DatasetArgs {
  std::string path;
  std::string format = "svmlight";
  int dim_override = 0;
  bool normalize = false;
};

inline void add_dataset_options(CLI::App* cmd, DatasetArgs& args) {
  cmd->add_option("--dataset", args.path, "input dataset file");
  cmd->add_option("--format", args.format, "dataset format: svmlight|csv")
      ->check(CLI::IsMember({"svmlight", "csv"}));
  cmd->add_option("--dim-override", args.dim_override, "override inferred dimension (svmlight)");
  cmd->add_flag("--normalize", args.normalize, "L2-normalize points after loading");
}

// --dataset wins; otherwise the config file must carry a synthetic block.
inline Dataset resolve_dataset(const DatasetArgs& args, const std::string& config_path) {
  if (!args.path.empty()) {
    Dataset ds = load_sparse(args.path,
                             args.format == "csv" ? FileFormat::csv_dense : FileFormat::svmlight,
                             args.dim_override);
    return args.normalize ? ds.l2_normalized() : std::move(ds);
  }
  if (config_path.empty())
    throw std::invalid_argument("no dataset: pass --dataset <file> or --config with a synthetic block");
  ExperimentConfig cfg = load_experiment_config(config_path);
  Dataset ds = materialize_dataset(cfg);
  return args.normalize ? ds.l2_normalized() : std::move(ds);
}

inline SeedSpec::Method parse_seed_method(const std::string& s) {
  if (s == "random-points") return SeedSpec::Method::random_points;
  if (s == "buckshot") return SeedSpec::Method::buckshot;
  throw std::invalid_argument("seed method must be random-points or buckshot");
}

}  // namespace detail

inline int run_cli(int argc, const char* const* argv) {
  CLI::App app{"kmlab: batch, online and mini-batch k-means with convergence diagnostics"};
  app.require_subcommand(1);
  app.set_version_flag("--version", KMLAB_VERSION);

  std::uint64_t master_seed = 0;
  int threads = 1;
  std::string config_path;
  app.add_option("--seed", master_seed, "master RNG seed");
  app.add_option("--threads", threads, "worker threads for sweeps");
  app.add_option("--config", config_path, "experiment config file");

  // fit: one stochastic run
  auto* fit = app.add_subcommand("fit", "run stochastic k-means once");
  detail::DatasetArgs fit_ds;
  detail::add_dataset_options(fit, fit_ds);
  int fit_k = 1;
  std::int64_t fit_m = 1, fit_iters = 100, fit_every = 1;
  std::string fit_policy = "flat";
  double fit_cprime = 2.0, fit_t0 = 3.0;
  std::string fit_seed_method = "random-points";
  int fit_m0 = 0;
  std::string fit_init, fit_ref_centroids, fit_ref_assign, fit_trace_out, fit_centroids_out;
  fit->add_option("--k", fit_k, "number of clusters")->required();
  fit->add_option("--m", fit_m, "mini-batch size");
  fit->add_option("--iters", fit_iters, "iteration budget");
  fit->add_option("--policy", fit_policy, "learning rate: flat|bbs")
      ->check(CLI::IsMember({"flat", "bbs"}));
  fit->add_option("--c-prime", fit_cprime, "flat rate numerator c'");
  fit->add_option("--t0", fit_t0, "flat rate offset t0");
  fit->add_option("--seed-method", fit_seed_method, "seeding: random-points|buckshot");
  fit->add_option("--m0", fit_m0, "buckshot sample size");
  fit->add_option("--init", fit_init, "initial centroids CSV (overrides seeding)");
  fit->add_option("--ref-centroids", fit_ref_centroids, "reference centroids for Delta tracking");
  fit->add_option("--ref-assign", fit_ref_assign, "reference assignment (cluster sizes for Delta)");
  fit->add_option("--cost-eval-every", fit_every, "full-cost evaluation period");
  fit->add_option("--trace-out", fit_trace_out, "write the run trace CSV here");
  fit->add_option("--centroids-out", fit_centroids_out, "write final centroids here");

  // batch: Lloyd's algorithm
  auto* batch = app.add_subcommand("batch", "run batch k-means (Lloyd)");
  detail::DatasetArgs batch_ds;
  detail::add_dataset_options(batch, batch_ds);
  int batch_k = 1, batch_iters = 1000;
  std::string batch_init, batch_seed_method = "random-points", batch_centroids_out, batch_assign_out;
  int batch_m0 = 0;
  batch->add_option("--k", batch_k, "number of clusters");
  batch->add_option("--max-iters", batch_iters, "iteration cap");
  batch->add_option("--init", batch_init, "initial centroids CSV (overrides seeding)");
  batch->add_option("--seed-method", batch_seed_method, "seeding: random-points|buckshot");
  batch->add_option("--m0", batch_m0, "buckshot sample size");
  batch->add_option("--centroids-out", batch_centroids_out, "write final centroids here");
  batch->add_option("--assign-out", batch_assign_out, "write final assignment here");

  // seed: emit seeds only
  auto* seed_cmd = app.add_subcommand("seed", "emit initial centroids");
  detail::DatasetArgs seed_ds;
  detail::add_dataset_options(seed_cmd, seed_ds);
  int seed_k = 1, seed_m0 = 0;
  std::string seed_method = "random-points", seed_out;
  seed_cmd->add_option("--k", seed_k, "number of seeds")->required();
  seed_cmd->add_option("--method", seed_method, "random-points|buckshot");
  seed_cmd->add_option("--m0", seed_m0, "buckshot sample size");
  seed_cmd->add_option("--out", seed_out, "output centroids CSV (stdout when absent)");

  // sweep: full experiment harness
  auto* sweep = app.add_subcommand("sweep", "run the (m, k, policy) sweep from a config file");

  // verify: clusterability diagnostics
  auto* verify = app.add_subcommand("verify", "check separation/margin/balance for a solution");
  detail::DatasetArgs verify_ds;
  detail::add_dataset_options(verify, verify_ds);
  std::string verify_solution, verify_assign, verify_probe_out;
  double verify_alpha = 0.01, verify_probe_b0 = 0.05;
  int verify_probe_trials = 0;
  verify->add_option("--solution", verify_solution, "centroids CSV")->required();
  verify->add_option("--assign", verify_assign, "assignment file (default: Voronoi of the solution)");
  verify->add_option("--alpha", verify_alpha, "alpha parameter in (0, 1]");
  verify->add_option("--probe-trials", verify_probe_trials,
                     "also run the stability probe with this many trials");
  verify->add_option("--probe-b0", verify_probe_b0, "stability probe radius b0");
  verify->add_option("--probe-out", verify_probe_out, "write per-trial probe rows here");

  // enumerate: micro-scale stationary clusterings
  auto* enumerate = app.add_subcommand("enumerate", "list all stationary clusterings (micro scale)");
  detail::DatasetArgs enum_ds;
  detail::add_dataset_options(enumerate, enum_ds);
  int enum_k = 2;
  enumerate->add_option("--k", enum_k, "maximum cluster count")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 1;
  }

  try {
    if (fit->parsed()) {
      Dataset ds = detail::resolve_dataset(fit_ds, config_path);
      Centroids c0 = fit_init.empty()
                         ? make_seeds(ds, SeedSpec{detail::parse_seed_method(fit_seed_method),
                                                   fit_k, fit_m0, derive_seed(master_seed, 0, 0)})
                         : load_centroids_csv(fit_init);
      StochasticConfig cfg;
      cfg.m = fit_m;
      cfg.policy = fit_policy == "bbs" ? RatePolicy::bbs() : RatePolicy::flat(fit_cprime, fit_t0);
      cfg.max_iters = fit_iters;
      cfg.cost_eval_every = fit_every;
      cfg.seed = derive_seed(master_seed, 0, 1);
      if (!fit_ref_centroids.empty()) {
        Centroids ref = load_centroids_csv(fit_ref_centroids);
        std::vector<std::int64_t> weights;
        if (!fit_ref_assign.empty()) {
          weights = load_assignment(fit_ref_assign, ref.k()).sizes;
        } else {
          weights = assign(ds, ref).clustering.sizes;
        }
        cfg.reference = ReferenceSolution{std::move(ref), std::move(weights)};
      }
      auto [c_final, trace] = run(ds, c0, cfg);
      if (!fit_trace_out.empty()) write_trace_csv(trace, fit_trace_out);
      if (!fit_centroids_out.empty()) write_centroids_csv(c_final, fit_centroids_out);
      std::cout << "iterations = " << trace.rows.size() << "\n"
                << "stop_reason = " << trace.stop_reason << "\n"
                << "phi_initial = " << detail::format_double(trace.initial_phi) << "\n"
                << "phi_final = " << detail::format_double(voronoi_cost(ds, c_final)) << "\n";
    } else if (batch->parsed()) {
      Dataset ds = detail::resolve_dataset(batch_ds, config_path);
      Centroids c0 = batch_init.empty()
                         ? make_seeds(ds, SeedSpec{detail::parse_seed_method(batch_seed_method),
                                                   batch_k, batch_m0, derive_seed(master_seed, 0, 0)})
                         : load_centroids_csv(batch_init);
      BatchResult res = lloyd_run(ds, c0, batch_iters);
      if (!batch_centroids_out.empty()) write_centroids_csv(res.final_centroids, batch_centroids_out);
      if (!batch_assign_out.empty()) write_assignment(res.final_clustering, batch_assign_out);
      std::cout << "iterations = " << res.iterations << "\n"
                << "stop_reason = " << to_string(res.stopped_reason) << "\n"
                << "phi_final = "
                << detail::format_double(cost(ds, res.final_centroids, res.final_clustering).total)
                << "\n";
    } else if (seed_cmd->parsed()) {
      Dataset ds = detail::resolve_dataset(seed_ds, config_path);
      Centroids c = make_seeds(ds, SeedSpec{detail::parse_seed_method(seed_method), seed_k,
                                            seed_m0, master_seed});
      if (seed_out.empty()) {
        for (int r = 0; r < c.k(); ++r) {
          const auto& row = c.centers[static_cast<std::size_t>(r)];
          for (std::size_t j = 0; j < row.size(); ++j)
            std::cout << (j ? "," : "") << detail::format_double(row[j]);
          std::cout << "\n";
        }
      } else {
        write_centroids_csv(c, seed_out);
      }
    } else if (sweep->parsed()) {
      if (config_path.empty())
        throw std::invalid_argument("sweep requires --config <file>");
      ExperimentConfig cfg = load_experiment_config(config_path);
      if (app.count("--seed") > 0) cfg.seed = master_seed;
      SweepResult result = run_sweep(cfg, threads);
      const std::vector<std::string> files = emit_plots_data(result, cfg.out_dir);
      std::cout << "wrote " << files.size() << " files to " << cfg.out_dir << "\n";
    } else if (verify->parsed()) {
      Dataset ds = detail::resolve_dataset(verify_ds, config_path);
      Centroids sol = load_centroids_csv(verify_solution);
      Clustering a = verify_assign.empty() ? assign(ds, sol).clustering
                                           : load_assignment(verify_assign, sol.k());
      AssumptionReport rep = check_assumptions(ds, a, sol, verify_alpha);
      std::cout << to_key_value(rep);
      if (verify_probe_trials > 0) {
        Rng rng(derive_seed(master_seed, 0, 2));
        StabilityReport probe =
            stability_probe(ds, a, sol, verify_probe_b0, verify_probe_trials, rng);
        std::cout << to_key_value(probe);
        if (!verify_probe_out.empty()) write_stability_csv(probe, verify_probe_out);
      }
    } else if (enumerate->parsed()) {
      Dataset ds = detail::resolve_dataset(enum_ds, config_path);
      const std::vector<StationaryPoint> points = enumerate_stationary(ds, enum_k);
      std::cout << "stationary_count = " << points.size() << "\n";
      for (std::size_t i = 0; i < points.size(); ++i) {
        std::cout << "clustering." << i << " =";
        for (const auto& group : points[i].clustering.canonical()) {
          std::cout << " {";
          for (std::size_t j = 0; j < group.size(); ++j)
            std::cout << (j ? "," : "") << group[j];
          std::cout << "}";
        }
        std::cout << " phi="
                  << detail::format_double(
                         cost(ds, points[i].centroids, points[i].clustering).total)
                  << "\n";
      }
    }
  } catch (const io_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}

}  // namespace kmlab
