#pragma once
// Point sets: dense and sparse storage, svmlight/CSV ingestion, and the
// clusterable synthetic generator. Datasets are immutable after
// construction and safe for concurrent reads.

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <limits>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "kmlab/rng.hpp"
#include "kmlab/solution.hpp"

namespace kmlab {

struct io_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct SparseEntry {
  int index;
  double value;
};

// One point. Sparse points keep sorted (index, value) pairs rather than a
// whole-matrix CSR layout: the solvers touch points one at a time.
class Point {
 public:
  static Point dense(std::vector<double> coords) {
    Point p;
    p.is_dense_ = true;
    p.dense_ = std::move(coords);
    p.squared_norm_ = 0.0;
    for (double v : p.dense_) p.squared_norm_ += v * v;
    return p;
  }

  // Entries must have strictly increasing indices in [0, dim).
  static Point sparse(std::vector<SparseEntry> entries, int dim) {
    Point p;
    p.is_dense_ = false;
    p.entries_ = std::move(entries);
    int prev = -1;
    p.squared_norm_ = 0.0;
    for (const auto& e : p.entries_) {
      if (e.index <= prev)
        throw std::invalid_argument("Point: sparse indices must be strictly increasing");
      if (e.index < 0 || e.index >= dim)
        throw std::invalid_argument("Point: sparse index out of range");
      prev = e.index;
      p.squared_norm_ += e.value * e.value;
    }
    return p;
  }

  bool is_dense() const { return is_dense_; }
  double squared_norm() const { return squared_norm_; }

  std::int64_t stored_count() const {
    return is_dense_ ? static_cast<std::int64_t>(dense_.size())
                     : static_cast<std::int64_t>(entries_.size());
  }

  const std::vector<double>& dense_coords() const { return dense_; }
  const std::vector<SparseEntry>& entries() const { return entries_; }

  double dot(std::span<const double> v) const {
    double s = 0.0;
    if (is_dense_) {
      for (std::size_t j = 0; j < dense_.size(); ++j) s += dense_[j] * v[j];
    } else {
      for (const auto& e : entries_) s += e.value * v[static_cast<std::size_t>(e.index)];
    }
    return s;
  }

  void add_to(std::span<double> acc, double w = 1.0) const {
    if (is_dense_) {
      for (std::size_t j = 0; j < dense_.size(); ++j) acc[j] += w * dense_[j];
    } else {
      for (const auto& e : entries_) acc[static_cast<std::size_t>(e.index)] += w * e.value;
    }
  }

  double coord(int j) const {
    if (is_dense_) return dense_[static_cast<std::size_t>(j)];
    auto it = std::lower_bound(entries_.begin(), entries_.end(), j,
                               [](const SparseEntry& e, int idx) { return e.index < idx; });
    if (it != entries_.end() && it->index == j) return it->value;
    return 0.0;
  }

  std::vector<double> to_dense(int dim) const {
    if (is_dense_) return dense_;
    std::vector<double> v(static_cast<std::size_t>(dim), 0.0);
    for (const auto& e : entries_) v[static_cast<std::size_t>(e.index)] = e.value;
    return v;
  }

 private:
  std::vector<double> dense_;
  std::vector<SparseEntry> entries_;
  double squared_norm_ = 0.0;
  bool is_dense_ = false;
};

class Dataset {
 public:
  Dataset(std::vector<Point> points, int dim, std::vector<std::string> labels = {})
      : points_(std::move(points)), dim_(dim), labels_(std::move(labels)) {
    if (points_.empty()) throw std::invalid_argument("Dataset: no points");
    if (dim_ <= 0) throw std::invalid_argument("Dataset: dim must be positive");
    for (const auto& p : points_) {
      if (p.is_dense() && static_cast<int>(p.dense_coords().size()) != dim_)
        throw std::invalid_argument("Dataset: point dimension mismatch");
    }
    if (!labels_.empty() && labels_.size() != points_.size())
      throw std::invalid_argument("Dataset: label count mismatch");
  }

  std::int64_t size() const { return static_cast<std::int64_t>(points_.size()); }
  int dim() const { return dim_; }
  const Point& point(std::int64_t i) const { return points_[static_cast<std::size_t>(i)]; }
  bool has_labels() const { return !labels_.empty(); }
  const std::vector<std::string>& labels() const { return labels_; }

  // L2-normalizes every point (zero points are left untouched).
  Dataset l2_normalized() const {
    std::vector<Point> out;
    out.reserve(points_.size());
    for (const auto& p : points_) {
      const double norm = std::sqrt(p.squared_norm());
      const double inv = norm > 0.0 ? 1.0 / norm : 1.0;
      if (p.is_dense()) {
        std::vector<double> c = p.dense_coords();
        for (auto& v : c) v *= inv;
        out.push_back(Point::dense(std::move(c)));
      } else {
        std::vector<SparseEntry> e = p.entries();
        for (auto& s : e) s.value *= inv;
        out.push_back(Point::sparse(std::move(e), dim_));
      }
    }
    return Dataset(std::move(out), dim_, labels_);
  }

 private:
  std::vector<Point> points_;
  int dim_;
  std::vector<std::string> labels_;
};

struct DatasetSummary {
  std::int64_t n = 0;
  int dim = 0;
  double density = 0.0;        // stored nonzeros / (n * d)
  double bbox_diagonal = 0.0;  // diagonal of the axis-aligned bounding box
};

inline DatasetSummary describe(const Dataset& ds) {
  DatasetSummary s;
  s.n = ds.size();
  s.dim = ds.dim();
  std::int64_t stored = 0;
  std::vector<double> lo(static_cast<std::size_t>(ds.dim()),
                         std::numeric_limits<double>::infinity());
  std::vector<double> hi(static_cast<std::size_t>(ds.dim()),
                         -std::numeric_limits<double>::infinity());
  std::vector<std::int64_t> seen(static_cast<std::size_t>(ds.dim()), 0);
  for (std::int64_t i = 0; i < ds.size(); ++i) {
    const Point& p = ds.point(i);
    stored += p.stored_count();
    if (p.is_dense()) {
      const auto& c = p.dense_coords();
      for (std::size_t j = 0; j < c.size(); ++j) {
        lo[j] = std::min(lo[j], c[j]);
        hi[j] = std::max(hi[j], c[j]);
        ++seen[j];
      }
    } else {
      for (const auto& e : p.entries()) {
        const auto j = static_cast<std::size_t>(e.index);
        lo[j] = std::min(lo[j], e.value);
        hi[j] = std::max(hi[j], e.value);
        ++seen[j];
      }
    }
  }
  double diag2 = 0.0;
  for (std::size_t j = 0; j < lo.size(); ++j) {
    // A coordinate missing from any sparse point is implicitly zero there.
    if (seen[j] < s.n) {
      lo[j] = std::min(lo[j], 0.0);
      hi[j] = std::max(hi[j], 0.0);
    }
    const double w = hi[j] - lo[j];
    diag2 += w * w;
  }
  s.bbox_diagonal = std::sqrt(diag2);
  s.density = static_cast<double>(stored) /
              (static_cast<double>(s.n) * static_cast<double>(s.dim));
  return s;
}

// ---------------------------------------------------------------------------
// File formats

enum class FileFormat { svmlight, csv_dense };

namespace detail {

inline bool parse_double(std::string_view tok, double& out) {
  if (!tok.empty() && tok.front() == '+') tok.remove_prefix(1);  // from_chars rejects '+'
  const char* begin = tok.data();
  const char* end = tok.data() + tok.size();
  auto res = std::from_chars(begin, end, out);
  return res.ec == std::errc() && res.ptr == end;
}

inline std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return std::string(buf);
}

inline std::vector<std::string_view> split_ws(std::string_view line) {
  std::vector<std::string_view> toks;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && std::isspace(static_cast<unsigned char>(line[i]))) ++i;
    std::size_t start = i;
    while (i < line.size() && !std::isspace(static_cast<unsigned char>(line[i]))) ++i;
    if (i > start) toks.push_back(line.substr(start, i - start));
  }
  return toks;
}

}  // namespace detail

// Reads `<label> <idx>:<val> ...` lines (1-based indices, svmlight) or
// headerless dense CSV. dim_override = 0 means infer; an override smaller
// than the largest seen index is an error.
inline Dataset load_sparse(const std::string& path, FileFormat fmt,
                           int dim_override = 0) {
  std::ifstream in(path);
  if (!in) throw io_error("cannot open dataset file: " + path);

  std::vector<Point> points;
  std::vector<std::string> labels;
  std::vector<std::vector<SparseEntry>> rows;
  std::vector<std::vector<double>> dense_rows;
  int max_index = -1;
  std::string line;
  std::int64_t lineno = 0;

  while (std::getline(in, line)) {
    ++lineno;
    if (auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
    while (!line.empty() && (line.back() == '\r' || line.back() == '\n')) line.pop_back();

    if (fmt == FileFormat::svmlight) {
      auto toks = detail::split_ws(line);
      if (toks.empty()) continue;
      if (toks[0].find(':') != std::string_view::npos)
        throw io_error(path + ":" + std::to_string(lineno) + ": missing label");
      labels.emplace_back(toks[0]);
      std::vector<SparseEntry> entries;
      for (std::size_t i = 1; i < toks.size(); ++i) {
        const auto colon = toks[i].find(':');
        if (colon == std::string_view::npos)
          throw io_error(path + ":" + std::to_string(lineno) +
                         ": expected idx:val, got '" + std::string(toks[i]) + "'");
        int idx = 0;
        double val = 0.0;
        auto idx_tok = toks[i].substr(0, colon);
        auto res = std::from_chars(idx_tok.data(), idx_tok.data() + idx_tok.size(), idx);
        if (res.ec != std::errc() || res.ptr != idx_tok.data() + idx_tok.size() || idx < 1)
          throw io_error(path + ":" + std::to_string(lineno) + ": bad feature index '" +
                         std::string(idx_tok) + "' (indices are 1-based)");
        if (!detail::parse_double(toks[i].substr(colon + 1), val))
          throw io_error(path + ":" + std::to_string(lineno) + ": bad feature value '" +
                         std::string(toks[i].substr(colon + 1)) + "'");
        entries.push_back({idx - 1, val});
        max_index = std::max(max_index, idx - 1);
      }
      std::sort(entries.begin(), entries.end(),
                [](const SparseEntry& a, const SparseEntry& b) { return a.index < b.index; });
      for (std::size_t i = 1; i < entries.size(); ++i)
        if (entries[i].index == entries[i - 1].index)
          throw io_error(path + ":" + std::to_string(lineno) + ": duplicate feature index " +
                         std::to_string(entries[i].index + 1));
      std::erase_if(entries, [](const SparseEntry& e) { return e.value == 0.0; });
      rows.push_back(std::move(entries));
    } else {
      if (detail::split_ws(line).empty()) continue;
      std::vector<double> coords;
      std::size_t start = 0;
      while (true) {
        const auto comma = line.find(',', start);
        std::string_view tok(line.data() + start,
                             (comma == std::string::npos ? line.size() : comma) - start);
        while (!tok.empty() && std::isspace(static_cast<unsigned char>(tok.front())))
          tok.remove_prefix(1);
        while (!tok.empty() && std::isspace(static_cast<unsigned char>(tok.back())))
          tok.remove_suffix(1);
        double v = 0.0;
        if (!detail::parse_double(tok, v))
          throw io_error(path + ":" + std::to_string(lineno) + ": bad value '" +
                         std::string(tok) + "'");
        coords.push_back(v);
        if (comma == std::string::npos) break;
        start = comma + 1;
      }
      if (!dense_rows.empty() && coords.size() != dense_rows.front().size())
        throw io_error(path + ":" + std::to_string(lineno) + ": expected " +
                       std::to_string(dense_rows.front().size()) + " columns, got " +
                       std::to_string(coords.size()));
      dense_rows.push_back(std::move(coords));
    }
  }

  if (fmt == FileFormat::svmlight) {
    if (rows.empty()) throw io_error(path + ": no points");
    int dim = max_index + 1;
    if (dim_override > 0) {
      if (dim_override < dim)
        throw io_error(path + ": dimension override " + std::to_string(dim_override) +
                       " smaller than max feature index " + std::to_string(dim));
      dim = dim_override;
    }
    if (dim == 0) dim = 1;  // all-zero points
    for (auto& r : rows) points.push_back(Point::sparse(std::move(r), dim));
    return Dataset(std::move(points), dim, std::move(labels));
  }

  if (dense_rows.empty()) throw io_error(path + ": no points");
  int dim = static_cast<int>(dense_rows.front().size());
  if (dim_override > 0 && dim_override != dim)
    throw io_error(path + ": dimension override " + std::to_string(dim_override) +
                   " does not match column count " + std::to_string(dim));
  for (auto& r : dense_rows) points.push_back(Point::dense(std::move(r)));
  return Dataset(std::move(points), dim);
}

// Writes svmlight format; values rendered with 17 significant digits so a
// reload reproduces them exactly.
inline void write_sparse(const Dataset& ds, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw io_error("cannot open file for writing: " + path);
  for (std::int64_t i = 0; i < ds.size(); ++i) {
    out << (ds.has_labels() ? ds.labels()[static_cast<std::size_t>(i)] : std::string("0"));
    const Point& p = ds.point(i);
    if (p.is_dense()) {
      const auto& c = p.dense_coords();
      for (std::size_t j = 0; j < c.size(); ++j)
        if (c[j] != 0.0) out << ' ' << (j + 1) << ':' << detail::format_double(c[j]);
    } else {
      for (const auto& e : p.entries())
        out << ' ' << (e.index + 1) << ':' << detail::format_double(e.value);
    }
    out << '\n';
  }
  if (!out) throw io_error("write failed: " + path);
}

inline void write_csv(const Dataset& ds, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw io_error("cannot open file for writing: " + path);
  for (std::int64_t i = 0; i < ds.size(); ++i) {
    const std::vector<double> c = ds.point(i).to_dense(ds.dim());
    for (std::size_t j = 0; j < c.size(); ++j) {
      if (j) out << ',';
      out << detail::format_double(c[j]);
    }
    out << '\n';
  }
  if (!out) throw io_error("write failed: " + path);
}

// ---------------------------------------------------------------------------
// Synthetic clusterable instances

// Points are drawn uniformly from balls around the given centers; bounded
// support keeps the separation margin of the instance exactly checkable.
struct SyntheticSpec {
  int k = 1;
  int dim = 1;
  std::vector<std::int64_t> sizes;           // per-cluster point counts
  std::vector<std::vector<double>> centers;  // k centers of length dim
  double radius = 1.0;
  std::uint64_t seed = 0;

  void validate() const {
    if (k < 1) throw std::invalid_argument("SyntheticSpec: k must be >= 1");
    if (dim < 1) throw std::invalid_argument("SyntheticSpec: dim must be >= 1");
    if (static_cast<int>(sizes.size()) != k)
      throw std::invalid_argument("SyntheticSpec: need one size per cluster");
    if (static_cast<int>(centers.size()) != k)
      throw std::invalid_argument("SyntheticSpec: need one center per cluster");
    for (auto s : sizes)
      if (s < 1) throw std::invalid_argument("SyntheticSpec: cluster sizes must be >= 1");
    for (const auto& c : centers)
      if (static_cast<int>(c.size()) != dim)
        throw std::invalid_argument("SyntheticSpec: center dimension mismatch");
    if (radius < 0.0) throw std::invalid_argument("SyntheticSpec: radius must be >= 0");
    for (int r = 0; r < k; ++r)
      for (int s = r + 1; s < k; ++s)
        if (centers[static_cast<std::size_t>(r)] == centers[static_cast<std::size_t>(s)])
          throw std::invalid_argument("SyntheticSpec: centers must be pairwise distinct");
  }
};

struct PlantedInstance {
  Dataset data;
  Centroids planted_centers;  // the spec's centers, not the sample means
  Clustering planted;
};

// Same spec (same seed included) always produces a bit-identical dataset.
// Cluster r occupies the contiguous index block following cluster r-1.
inline PlantedInstance generate_clusterable(const SyntheticSpec& spec) {
  spec.validate();
  Rng rng(spec.seed);
  std::vector<Point> points;
  std::vector<int> assignment;
  for (int r = 0; r < spec.k; ++r) {
    const auto& c = spec.centers[static_cast<std::size_t>(r)];
    for (std::int64_t i = 0; i < spec.sizes[static_cast<std::size_t>(r)]; ++i) {
      std::vector<double> x = rng.next_in_ball(spec.dim, spec.radius);
      for (int j = 0; j < spec.dim; ++j) x[static_cast<std::size_t>(j)] += c[static_cast<std::size_t>(j)];
      points.push_back(Point::dense(std::move(x)));
      assignment.push_back(r);
    }
  }
  Dataset ds(std::move(points), spec.dim);
  Centroids centers(spec.centers);
  Clustering planted(std::move(assignment), spec.k);
  return PlantedInstance{std::move(ds), std::move(centers), std::move(planted)};
}

}  // namespace kmlab
