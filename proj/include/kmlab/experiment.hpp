#pragma once
// Experiment harness: sweeps (m, k, rate policy) over repeated stochastic
// runs from shared per-cell seeds, averages the cost series, fits log-log
// slopes against the (phi0 - phi_min)/t baseline, and emits plot-ready
// CSVs plus a manifest. Independent (cell, policy, rep) runs execute in
// parallel; every run owns an RNG stream derived from
// (master seed, cell index, run index), so output bytes do not depend on
// the worker count.

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <mutex>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "kmlab/dataset.hpp"
#include "kmlab/digest.hpp"
#include "kmlab/seeding.hpp"
#include "kmlab/stochastic.hpp"
#include "kmlab/theory.hpp"
#include "kmlab/version.hpp"

namespace kmlab {

struct ExperimentConfig {
  std::string dataset_path;
  FileFormat dataset_format = FileFormat::svmlight;
  std::optional<SyntheticSpec> synthetic;
  std::vector<std::int64_t> m_list;
  std::vector<int> k_list;
  std::vector<RatePolicy> policies;
  int reps = 5;
  std::int64_t iters = 100;
  std::uint64_t seed = 0;
  std::string out_dir = "out";
  bool normalize = false;
  std::int64_t cost_eval_every = 1;
  SeedSpec::Method seed_method = SeedSpec::Method::random_points;
  int m0 = 0;

  std::string canonical_string() const {
    std::ostringstream os;
    if (!dataset_path.empty())
      os << "dataset=" << dataset_path << ";format="
         << (dataset_format == FileFormat::svmlight ? "svmlight" : "csv") << ';';
    if (synthetic) {
      os << "synthetic.k=" << synthetic->k << ";synthetic.dim=" << synthetic->dim
         << ";synthetic.radius=" << detail::format_double(synthetic->radius)
         << ";synthetic.seed=" << synthetic->seed << ';';
      for (auto s : synthetic->sizes) os << "size=" << s << ';';
      for (const auto& c : synthetic->centers) {
        os << "center=";
        for (double v : c) os << detail::format_double(v) << ',';
        os << ';';
      }
    }
    os << "m=";
    for (auto m : m_list) os << m << ',';
    os << ";k=";
    for (auto k : k_list) os << k << ',';
    os << ";policies=";
    for (const auto& p : policies) os << p.label() << ',';
    os << ";reps=" << reps << ";iters=" << iters << ";seed=" << seed
       << ";normalize=" << (normalize ? 1 : 0) << ";every=" << cost_eval_every
       << ";seed_method="
       << (seed_method == SeedSpec::Method::buckshot ? "buckshot" : "random-points")
       << ";m0=" << m0;
    return os.str();
  }
};

namespace detail {

inline std::string trim(std::string_view s) {
  std::size_t a = 0, b = s.size();
  while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
  while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
  return std::string(s.substr(a, b - a));
}

inline std::vector<double> parse_double_list(const std::string& value,
                                             const std::string& key,
                                             std::vector<std::string>& errors) {
  std::vector<double> out;
  std::size_t start = 0;
  while (start <= value.size()) {
    const auto comma = value.find(',', start);
    const std::string tok =
        trim(std::string_view(value).substr(start, (comma == std::string::npos ? value.size() : comma) - start));
    if (!tok.empty()) {
      double v = 0.0;
      if (!parse_double(tok, v)) {
        errors.push_back(key + ": bad number '" + tok + "'");
        return out;
      }
      out.push_back(v);
    }
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  return out;
}

// Runs fn(0..n_tasks-1) on up to `threads` workers; task order inside a
// worker is arbitrary but each task writes only its own slot.
inline void parallel_tasks(int n_tasks, int threads, const std::function<void(int)>& fn) {
  threads = std::max(1, std::min(threads, n_tasks));
  if (threads == 1) {
    for (int i = 0; i < n_tasks; ++i) fn(i);
    return;
  }
  std::atomic<int> next{0};
  std::exception_ptr first_error = nullptr;
  std::mutex error_mutex;
  std::vector<std::thread> pool;
  pool.reserve(static_cast<std::size_t>(threads));
  for (int w = 0; w < threads; ++w) {
    pool.emplace_back([&] {
      while (true) {
        const int i = next.fetch_add(1);
        if (i >= n_tasks) return;
        try {
          fn(i);
        } catch (...) {
          std::lock_guard<std::mutex> lock(error_mutex);
          if (!first_error) first_error = std::current_exception();
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  if (first_error) std::rethrow_exception(first_error);
}

}  // namespace detail

// Flat `key = value` config, `#` comments, repeated keys for lists.
// Recognized keys: dataset, dataset_format, synthetic.*, m_list, k_list,
// policy.N.kind / policy.N.c_prime / policy.N.t0, reps, iters, seed,
// out_dir, normalize, cost_eval_every, seed_method, m0.
inline ExperimentConfig parse_experiment_config(std::istream& in,
                                                const std::string& origin = "<config>") {
  std::vector<std::string> errors;
  ExperimentConfig cfg;
  cfg.reps = 0;   // sentinels: required fields
  cfg.iters = 0;

  std::map<int, std::map<std::string, std::string>> policy_fields;
  bool has_synthetic = false;
  SyntheticSpec syn;
  std::vector<std::vector<double>> centers;
  std::vector<std::int64_t> sizes;
  double separation = 0.0;

  std::string line;
  std::int64_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
    const std::string stripped = detail::trim(line);
    if (stripped.empty()) continue;
    const auto eq = stripped.find('=');
    if (eq == std::string::npos) {
      errors.push_back(origin + ":" + std::to_string(lineno) + ": expected key = value");
      continue;
    }
    const std::string key = detail::trim(std::string_view(stripped).substr(0, eq));
    const std::string value = detail::trim(std::string_view(stripped).substr(eq + 1));

    auto as_int = [&](std::int64_t& out) {
      try {
        out = std::stoll(value);
        return true;
      } catch (...) {
        errors.push_back(key + ": bad integer '" + value + "'");
        return false;
      }
    };
    auto as_double = [&](double& out) {
      if (!detail::parse_double(value, out)) {
        errors.push_back(key + ": bad number '" + value + "'");
        return false;
      }
      return true;
    };

    if (key == "dataset") {
      cfg.dataset_path = value;
    } else if (key == "dataset_format") {
      if (value == "svmlight")
        cfg.dataset_format = FileFormat::svmlight;
      else if (value == "csv")
        cfg.dataset_format = FileFormat::csv_dense;
      else
        errors.push_back("dataset_format: expected svmlight or csv, got '" + value + "'");
    } else if (key == "synthetic.k") {
      std::int64_t v;
      if (as_int(v)) syn.k = static_cast<int>(v);
      has_synthetic = true;
    } else if (key == "synthetic.dim") {
      std::int64_t v;
      if (as_int(v)) syn.dim = static_cast<int>(v);
      has_synthetic = true;
    } else if (key == "synthetic.size") {
      std::int64_t v;
      if (as_int(v)) sizes.push_back(v);
      has_synthetic = true;
    } else if (key == "synthetic.center") {
      centers.push_back(detail::parse_double_list(value, key, errors));
      has_synthetic = true;
    } else if (key == "synthetic.separation") {
      as_double(separation);
      has_synthetic = true;
    } else if (key == "synthetic.radius") {
      as_double(syn.radius);
      has_synthetic = true;
    } else if (key == "synthetic.seed") {
      std::int64_t v;
      if (as_int(v)) syn.seed = static_cast<std::uint64_t>(v);
      has_synthetic = true;
    } else if (key == "m_list") {
      for (double v : detail::parse_double_list(value, key, errors))
        cfg.m_list.push_back(static_cast<std::int64_t>(v));
    } else if (key == "k_list") {
      for (double v : detail::parse_double_list(value, key, errors))
        cfg.k_list.push_back(static_cast<int>(v));
    } else if (key.rfind("policy.", 0) == 0) {
      const auto rest = key.substr(7);
      const auto dot = rest.find('.');
      if (dot == std::string::npos) {
        errors.push_back(key + ": expected policy.N.field");
        continue;
      }
      int idx = 0;
      try {
        idx = std::stoi(rest.substr(0, dot));
      } catch (...) {
        errors.push_back(key + ": bad policy index");
        continue;
      }
      policy_fields[idx][rest.substr(dot + 1)] = value;
    } else if (key == "reps") {
      std::int64_t v;
      if (as_int(v)) cfg.reps = static_cast<int>(v);
    } else if (key == "iters") {
      as_int(cfg.iters);
    } else if (key == "seed") {
      std::int64_t v;
      if (as_int(v)) cfg.seed = static_cast<std::uint64_t>(v);
    } else if (key == "out_dir") {
      cfg.out_dir = value;
    } else if (key == "normalize") {
      if (value == "true" || value == "1")
        cfg.normalize = true;
      else if (value == "false" || value == "0")
        cfg.normalize = false;
      else
        errors.push_back("normalize: expected true/false, got '" + value + "'");
    } else if (key == "cost_eval_every") {
      as_int(cfg.cost_eval_every);
    } else if (key == "seed_method") {
      if (value == "random-points")
        cfg.seed_method = SeedSpec::Method::random_points;
      else if (value == "buckshot")
        cfg.seed_method = SeedSpec::Method::buckshot;
      else
        errors.push_back("seed_method: expected random-points or buckshot, got '" + value + "'");
    } else if (key == "m0") {
      std::int64_t v;
      if (as_int(v)) cfg.m0 = static_cast<int>(v);
    } else {
      errors.push_back("unknown key '" + key + "'");
    }
  }

  // policies, ordered by index
  for (const auto& [idx, fields] : policy_fields) {
    const std::string prefix = "policy." + std::to_string(idx) + ".";
    auto it = fields.find("kind");
    if (it == fields.end()) {
      errors.push_back(prefix + "kind: missing");
      continue;
    }
    if (it->second == "bbs") {
      cfg.policies.push_back(RatePolicy::bbs());
    } else if (it->second == "flat") {
      double c_prime = 0.0, t0 = 0.0;
      bool ok = true;
      auto cp = fields.find("c_prime");
      auto t0f = fields.find("t0");
      if (cp == fields.end() || !detail::parse_double(cp->second, c_prime)) {
        errors.push_back(prefix + "c_prime: missing or bad");
        ok = false;
      }
      if (t0f == fields.end() || !detail::parse_double(t0f->second, t0)) {
        errors.push_back(prefix + "t0: missing or bad");
        ok = false;
      }
      if (ok) {
        try {
          cfg.policies.push_back(RatePolicy::flat(c_prime, t0));
        } catch (const std::exception& e) {
          errors.push_back(prefix + "c_prime/t0: " + e.what());
        }
      }
    } else {
      errors.push_back(prefix + "kind: expected flat or bbs, got '" + it->second + "'");
    }
  }

  if (has_synthetic) {
    if (!cfg.dataset_path.empty())
      errors.push_back("dataset/synthetic.*: provide a file or a synthetic spec, not both");
    if (sizes.size() == 1 && syn.k > 1) sizes.assign(static_cast<std::size_t>(syn.k), sizes[0]);
    syn.sizes = sizes;
    if (centers.empty() && separation > 0.0) {
      // auto layout: center 0 at the origin, center r on axis r-1
      for (int r = 0; r < syn.k; ++r) {
        std::vector<double> c(static_cast<std::size_t>(syn.dim), 0.0);
        if (r > 0) {
          if (r - 1 >= syn.dim) {
            errors.push_back("synthetic.separation: auto layout needs dim >= k - 1");
            break;
          }
          c[static_cast<std::size_t>(r - 1)] = separation;
        }
        centers.push_back(std::move(c));
      }
    }
    syn.centers = centers;
    try {
      syn.validate();
    } catch (const std::exception& e) {
      errors.push_back(std::string("synthetic.*: ") + e.what());
    }
    cfg.synthetic = syn;
  } else if (cfg.dataset_path.empty()) {
    errors.push_back("dataset: missing (set dataset = <path> or a synthetic.* block)");
  }

  if (cfg.m_list.empty()) errors.push_back("m_list: missing");
  for (auto m : cfg.m_list)
    if (m < 1) errors.push_back("m_list: entries must be >= 1");
  if (cfg.k_list.empty()) errors.push_back("k_list: missing");
  for (auto k : cfg.k_list)
    if (k < 1) errors.push_back("k_list: entries must be >= 1");
  if (cfg.policies.empty()) errors.push_back("policy.*: at least one policy required");
  if (cfg.reps < 1) errors.push_back("reps: must be >= 1");
  if (cfg.iters < 1) errors.push_back("iters: must be >= 1");
  if (cfg.cost_eval_every < 1) errors.push_back("cost_eval_every: must be >= 1");
  if (cfg.seed_method == SeedSpec::Method::buckshot) {
    for (auto k : cfg.k_list)
      if (cfg.m0 < k) errors.push_back("m0: buckshot needs m0 >= every k in k_list");
  }

  if (!errors.empty()) {
    std::string msg = "invalid experiment config:";
    for (const auto& e : errors) msg += "\n  - " + e;
    throw std::invalid_argument(msg);
  }
  return cfg;
}

inline ExperimentConfig load_experiment_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw io_error("cannot open config file: " + path);
  return parse_experiment_config(in, path);
}

struct CellPolicySeries {
  std::int64_t m = 0;
  int k = 0;
  std::string policy_label;
  std::vector<std::int64_t> ts;   // evaluation iterations
  std::vector<double> phi_avg;    // averaged over reps, same length as ts
  double phi0 = 0.0;              // shared initial cost of the cell
  double phi_min = 0.0;           // min over the averaged series
  std::optional<SlopeFit> slope;  // missing when the fit is undefined
  std::vector<RunTrace> raw;      // one trace per rep
};

struct CellInfo {
  int index = 0;
  std::int64_t m = 0;
  int k = 0;
  std::string c0_digest;
};

struct SweepResult {
  std::vector<CellPolicySeries> series;  // cell-major, then policy order
  std::vector<CellInfo> cells;
  std::string config_digest;
  std::uint64_t master_seed = 0;
  bool normalized = false;
  std::int64_t dataset_n = 0;
  int dataset_dim = 0;
};

inline Dataset materialize_dataset(const ExperimentConfig& cfg) {
  if (cfg.synthetic) {
    PlantedInstance inst = generate_clusterable(*cfg.synthetic);
    return cfg.normalize ? inst.data.l2_normalized() : std::move(inst.data);
  }
  Dataset ds = load_sparse(cfg.dataset_path, cfg.dataset_format);
  return cfg.normalize ? ds.l2_normalized() : std::move(ds);
}

// Protocol per cell (m, k): one seed set C0 shared by every policy, run
// seeds shared across policies as well (paired sampling sequences), reps
// averaged pointwise. phi_min is taken over the averaged series.
inline SweepResult run_sweep(const ExperimentConfig& cfg, const Dataset& ds, int threads = 1) {
  struct Task {
    int cell;
    int policy;
    int rep;
  };
  const int n_cells = static_cast<int>(cfg.m_list.size() * cfg.k_list.size());
  const int n_policies = static_cast<int>(cfg.policies.size());
  std::vector<Task> tasks;
  for (int cell = 0; cell < n_cells; ++cell)
    for (int p = 0; p < n_policies; ++p)
      for (int rep = 0; rep < cfg.reps; ++rep) tasks.push_back(Task{cell, p, rep});

  auto cell_m = [&](int cell) { return cfg.m_list[static_cast<std::size_t>(cell) / cfg.k_list.size()]; };
  auto cell_k = [&](int cell) { return cfg.k_list[static_cast<std::size_t>(cell) % cfg.k_list.size()]; };

  auto seed_cell = [&](int cell) {
    SeedSpec spec;
    spec.method = cfg.seed_method;
    spec.k = cell_k(cell);
    spec.m0 = cfg.m0;
    spec.seed = derive_seed(cfg.seed, static_cast<std::uint64_t>(cell), 0);
    return make_seeds(ds, spec);
  };

  std::vector<std::pair<Centroids, RunTrace>> results(tasks.size());
  detail::parallel_tasks(static_cast<int>(tasks.size()), threads, [&](int i) {
    const Task& task = tasks[static_cast<std::size_t>(i)];
    const Centroids c0 = seed_cell(task.cell);
    StochasticConfig rc;
    rc.m = cell_m(task.cell);
    rc.policy = cfg.policies[static_cast<std::size_t>(task.policy)];
    rc.max_iters = cfg.iters;
    rc.cost_eval_every = cfg.cost_eval_every;
    rc.plateau_eps = 0.0;  // sweeps need full-length series
    rc.seed = derive_seed(cfg.seed, static_cast<std::uint64_t>(task.cell),
                          static_cast<std::uint64_t>(task.rep) + 1);
    results[static_cast<std::size_t>(i)] = run(ds, c0, rc);
  });

  SweepResult out;
  out.master_seed = cfg.seed;
  out.normalized = cfg.normalize;
  out.dataset_n = ds.size();
  out.dataset_dim = ds.dim();
  out.config_digest = hex64(fnv1a64(cfg.canonical_string()));

  for (int cell = 0; cell < n_cells; ++cell) {
    const Centroids c0 = seed_cell(cell);
    std::string bytes;
    for (const auto& center : c0.centers)
      bytes.append(reinterpret_cast<const char*>(center.data()), center.size() * sizeof(double));
    out.cells.push_back(CellInfo{cell, cell_m(cell), cell_k(cell), hex64(fnv1a64(bytes))});
  }

  auto task_index = [&](int cell, int p, int rep) {
    return (static_cast<std::size_t>(cell) * n_policies + static_cast<std::size_t>(p)) * cfg.reps +
           static_cast<std::size_t>(rep);
  };

  for (int cell = 0; cell < n_cells; ++cell) {
    for (int p = 0; p < n_policies; ++p) {
      CellPolicySeries s;
      s.m = cell_m(cell);
      s.k = cell_k(cell);
      s.policy_label = cfg.policies[static_cast<std::size_t>(p)].label();
      for (int rep = 0; rep < cfg.reps; ++rep)
        s.raw.push_back(results[task_index(cell, p, rep)].second);

      s.phi0 = s.raw.front().initial_phi;
      for (const auto& row : s.raw.front().rows) {
        if (!std::isfinite(row.phi)) continue;
        s.ts.push_back(row.t);
      }
      for (std::size_t j = 0; j < s.ts.size(); ++j) {
        double sum = 0.0;
        for (const auto& trace : s.raw) {
          const auto& row = trace.rows[static_cast<std::size_t>(s.ts[j]) - 1];
          sum += row.phi;
        }
        s.phi_avg.push_back(sum / static_cast<double>(cfg.reps));
      }
      s.phi_min = s.phi_avg.empty() ? s.phi0
                                    : *std::min_element(s.phi_avg.begin(), s.phi_avg.end());
      try {
        std::vector<double> ts_d(s.ts.begin(), s.ts.end());
        s.slope = fit_loglog_slope(ts_d, s.phi_avg, s.phi_min);
      } catch (const std::exception&) {
        s.slope = std::nullopt;  // undefined fit is reported as missing
      }
      out.series.push_back(std::move(s));
    }
  }
  return out;
}

inline SweepResult run_sweep(const ExperimentConfig& cfg, int threads = 1) {
  const Dataset ds = materialize_dataset(cfg);
  return run_sweep(cfg, ds, threads);
}

// Writes convergence_<m>_<k>_<policy>.csv per configuration, slopes.csv,
// raw traces under traces/, and manifest.txt. Returns the file list.
inline std::vector<std::string> emit_plots_data(const SweepResult& result,
                                                const std::string& out_dir) {
  namespace fs = std::filesystem;
  std::error_code ec;
  fs::create_directories(fs::path(out_dir) / "traces", ec);
  if (ec) throw io_error("cannot create output directory: " + out_dir);

  std::vector<std::string> files;
  for (const auto& s : result.series) {
    const std::string name = "convergence_" + std::to_string(s.m) + "_" + std::to_string(s.k) +
                             "_" + s.policy_label + ".csv";
    const std::string path = (fs::path(out_dir) / name).string();
    std::ofstream out(path);
    if (!out) throw io_error("cannot open file for writing: " + path);
    out << "t,phi_avg,phi_minus_floor,baseline\n";
    for (std::size_t j = 0; j < s.ts.size(); ++j) {
      const double baseline = (s.phi0 - s.phi_min) / static_cast<double>(s.ts[j]);
      out << s.ts[j] << ',' << detail::format_double(s.phi_avg[j]) << ','
          << detail::format_double(s.phi_avg[j] - s.phi_min) << ','
          << detail::format_double(baseline) << '\n';
    }
    if (!out) throw io_error("write failed: " + path);
    files.push_back(path);

    for (std::size_t rep = 0; rep < s.raw.size(); ++rep) {
      const std::string tname = "trace_" + std::to_string(s.m) + "_" + std::to_string(s.k) +
                                "_" + s.policy_label + "_run" + std::to_string(rep) + ".csv";
      const std::string tpath = (fs::path(out_dir) / "traces" / tname).string();
      write_trace_csv(s.raw[rep], tpath);
      files.push_back(tpath);
    }
  }

  {
    const std::string path = (fs::path(out_dir) / "slopes.csv").string();
    std::ofstream out(path);
    if (!out) throw io_error("cannot open file for writing: " + path);
    out << "m,k,policy,slope,r2,phi0,phi_min\n";
    for (const auto& s : result.series) {
      out << s.m << ',' << s.k << ',' << s.policy_label << ',';
      if (s.slope) out << detail::format_double(s.slope->slope);
      out << ',';
      if (s.slope) out << detail::format_double(s.slope->r2);
      out << ',' << detail::format_double(s.phi0) << ',' << detail::format_double(s.phi_min)
          << '\n';
    }
    if (!out) throw io_error("write failed: " + path);
    files.push_back(path);
  }

  {
    const std::string path = (fs::path(out_dir) / "manifest.txt").string();
    std::ofstream out(path);
    if (!out) throw io_error("cannot open file for writing: " + path);
    out << "kmlab_version = " << KMLAB_VERSION << '\n'
        << "config_digest = " << result.config_digest << '\n'
        << "master_seed = " << result.master_seed << '\n'
        << "normalize = " << (result.normalized ? 1 : 0) << '\n'
        << "dataset_n = " << result.dataset_n << '\n'
        << "dataset_dim = " << result.dataset_dim << '\n';
    for (const auto& c : result.cells)
      out << "cell." << c.index << " = m=" << c.m << " k=" << c.k
          << " c0_digest=" << c.c0_digest << '\n';
    if (!out) throw io_error("write failed: " + path);
    files.push_back(path);
  }
  return files;
}

}  // namespace kmlab
