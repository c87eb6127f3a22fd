#pragma once

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "bge/errors.hpp"
#include "bge/rng.hpp"

namespace bge {

// Unordered node pair stored canonically as first < second.
struct NodePair {
  int i = 0;
  int j = 0;
  friend bool operator==(const NodePair&, const NodePair&) = default;
  friend auto operator<=>(const NodePair&, const NodePair&) = default;
};

// Number of unordered pairs {i, j}, i < j, over n nodes.
inline std::int64_t pair_count(std::int64_t n) {
  if (n < 0) throw ValidationError("pair_count: negative node count");
  return n * (n - 1) / 2;
}

// Row-major rank of the pair (i, j), i < j, within the upper triangle.
inline std::int64_t index_from_pair(std::int64_t n, NodePair p) {
  std::int64_t i = p.i, j = p.j;
  return i * n - i * (i + 1) / 2 + (j - i - 1);
}

// Inverse of index_from_pair: maps a rank in [0, n(n-1)/2) back to (i, j)
// without materializing the pair list. Float guess, then exact fix-up.
inline NodePair pair_from_index(std::int64_t n, std::int64_t r) {
  if (r < 0 || r >= pair_count(n))
    throw ValidationError("pair_from_index: rank out of range");
  auto offset = [n](std::int64_t i) { return i * n - i * (i + 1) / 2; };
  double nn = 2.0 * static_cast<double>(n) - 1.0;
  std::int64_t i = static_cast<std::int64_t>(
      (nn - std::sqrt(nn * nn - 8.0 * static_cast<double>(r))) / 2.0);
  if (i < 0) i = 0;
  if (i > n - 2) i = n - 2;
  while (i > 0 && offset(i) > r) --i;
  while (i < n - 2 && offset(i + 1) <= r) ++i;
  std::int64_t j = i + 1 + (r - offset(i));
  return NodePair{static_cast<int>(i), static_cast<int>(j)};
}

// Data vectors plus a sparse symmetric link-weight structure. Weights are
// stored only for i < j and only when positive; everything else is an
// implicit zero. Intended to be built once and then treated as immutable
// (concurrent reads are safe; there is no synchronization for writes).
class Dataset {
 public:
  // Single-view dataset: all rows share one encoder.
  explicit Dataset(std::vector<Eigen::VectorXd> features)
      : Dataset(std::move(features), {}, 1) {}

  // Multi-view dataset: view_tags[i] in [0, num_views); rows with the same
  // tag must have identical dimension. An empty tag vector means view 0.
  Dataset(std::vector<Eigen::VectorXd> features, std::vector<int> view_tags,
          int num_views)
      : features_(std::move(features)),
        views_(std::move(view_tags)),
        num_views_(num_views) {
    if (num_views_ < 1) throw ValidationError("Dataset: num_views < 1");
    if (views_.empty()) views_.assign(features_.size(), 0);
    if (views_.size() != features_.size())
      throw ValidationError("Dataset: view tag count != row count");
    view_dims_.assign(num_views_, -1);
    for (std::size_t r = 0; r < features_.size(); ++r) {
      int d = views_[r];
      if (d < 0 || d >= num_views_)
        throw ValidationError("Dataset: view tag out of range at row " +
                              std::to_string(r));
      int dim = static_cast<int>(features_[r].size());
      if (view_dims_[d] < 0) view_dims_[d] = dim;
      if (view_dims_[d] != dim)
        throw ValidationError(
            "Dataset: dimension mismatch within view " + std::to_string(d) +
            " at row " + std::to_string(r) + " (" + std::to_string(dim) +
            " vs " + std::to_string(view_dims_[d]) + ")");
    }
  }

  int n() const { return static_cast<int>(features_.size()); }
  int num_views() const { return num_views_; }
  int view_of(int i) const { return views_[static_cast<std::size_t>(i)]; }
  int dim_of_view(int d) const { return view_dims_[static_cast<std::size_t>(d)]; }
  const Eigen::VectorXd& feature(int i) const {
    return features_[static_cast<std::size_t>(i)];
  }
  const std::vector<int>& view_tags() const { return views_; }

  std::int64_t all_pair_count() const { return pair_count(n()); }

  // Sets w_{ij} = w_{ji} = w. Orientation is canonicalized; w must be >= 1
  // (zero weights are implicit and never stored).
  void set_weight(int i, int j, std::int64_t w) {
    if (i == j) throw ValidationError("Dataset: self-loop weight");
    if (i < 0 || j < 0 || i >= n() || j >= n())
      throw ValidationError("Dataset: pair index out of range");
    if (w < 1) throw ValidationError("Dataset: stored weight must be >= 1");
    if (i > j) std::swap(i, j);
    weights_[pack(i, j)] = w;
    pairs_dirty_ = true;
  }

  // w_{ij}; 0 when the pair is not stored.
  std::int64_t weight(int i, int j) const {
    if (i == j) return 0;
    if (i > j) std::swap(i, j);
    auto it = weights_.find(pack(i, j));
    return it == weights_.end() ? 0 : it->second;
  }

  std::int64_t positive_count() const {
    return static_cast<std::int64_t>(weights_.size());
  }

  // All pairs with positive weight, sorted (the canonical W_n ordering).
  const std::vector<NodePair>& positive_pairs() const {
    if (pairs_dirty_) {
      sorted_pairs_.clear();
      sorted_pairs_.reserve(weights_.size());
      for (const auto& [key, w] : weights_)
        sorted_pairs_.push_back(unpack(key));
      std::sort(sorted_pairs_.begin(), sorted_pairs_.end());
      pairs_dirty_ = false;
    }
    return sorted_pairs_;
  }

  friend bool operator==(const Dataset& a, const Dataset& b) {
    if (a.n() != b.n() || a.num_views_ != b.num_views_ || a.views_ != b.views_)
      return false;
    for (int i = 0; i < a.n(); ++i)
      if (a.feature(i) != b.feature(i)) return false;
    return a.weights_ == b.weights_;
  }

 private:
  std::int64_t pack(int i, int j) const {
    return static_cast<std::int64_t>(i) * n() + j;
  }
  NodePair unpack(std::int64_t key) const {
    return NodePair{static_cast<int>(key / n()), static_cast<int>(key % n())};
  }

  std::vector<Eigen::VectorXd> features_;
  std::vector<int> views_;
  int num_views_;
  std::vector<int> view_dims_;
  std::unordered_map<std::int64_t, std::int64_t> weights_;
  mutable std::vector<NodePair> sorted_pairs_;
  mutable bool pairs_dirty_ = true;
};

// Deterministic list of all pairs with w > 0 (delegates to the Dataset cache).
inline std::vector<NodePair> positive_pairs(const Dataset& d) {
  return d.positive_pairs();
}

// One minibatch: m1 positives from W_n and m2 contrast pairs from I_n.
// Each list is duplicate-free; the two lists may overlap.
struct PairBatch {
  std::vector<NodePair> positive_pairs;
  std::vector<NodePair> contrast_pairs;
};

// Uniform without-replacement samples from W_n and from the virtual index
// space of I_n. I_n is never materialized: contrast ranks are drawn in
// [0, n(n-1)/2) and inverted to pairs (rejection handles duplicates; when
// m2 is a large fraction of I_n a partial Fisher-Yates over ranks is used
// instead).
inline PairBatch sample_batch(const Dataset& d, std::int64_t m1,
                              std::int64_t m2, RngStream& rng) {
  const auto& wn = d.positive_pairs();
  const std::int64_t total = d.all_pair_count();
  if (m1 < 0 || m1 > static_cast<std::int64_t>(wn.size()))
    throw ValidationError("sample_batch: m1 exceeds |W_n|");
  if (m2 < 0 || m2 > total)
    throw ValidationError("sample_batch: m2 exceeds |I_n|");

  PairBatch batch;
  batch.positive_pairs.reserve(static_cast<std::size_t>(m1));
  std::vector<std::int64_t> idx(wn.size());
  for (std::size_t k = 0; k < idx.size(); ++k) idx[k] = static_cast<std::int64_t>(k);
  for (std::int64_t k = 0; k < m1; ++k) {
    std::int64_t pick =
        k + static_cast<std::int64_t>(rng.uniform_index(
                static_cast<std::uint64_t>(idx.size() - static_cast<std::size_t>(k))));
    std::swap(idx[static_cast<std::size_t>(k)], idx[static_cast<std::size_t>(pick)]);
    batch.positive_pairs.push_back(wn[static_cast<std::size_t>(idx[static_cast<std::size_t>(k)])]);
  }

  batch.contrast_pairs.reserve(static_cast<std::size_t>(m2));
  if (2 * m2 >= total) {
    std::vector<std::int64_t> ranks(static_cast<std::size_t>(total));
    for (std::int64_t r = 0; r < total; ++r) ranks[static_cast<std::size_t>(r)] = r;
    for (std::int64_t k = 0; k < m2; ++k) {
      std::int64_t pick =
          k + static_cast<std::int64_t>(rng.uniform_index(
                  static_cast<std::uint64_t>(total - k)));
      std::swap(ranks[static_cast<std::size_t>(k)], ranks[static_cast<std::size_t>(pick)]);
      batch.contrast_pairs.push_back(pair_from_index(d.n(), ranks[static_cast<std::size_t>(k)]));
    }
  } else {
    std::unordered_set<std::int64_t> seen;
    seen.reserve(static_cast<std::size_t>(m2) * 2);
    while (static_cast<std::int64_t>(batch.contrast_pairs.size()) < m2) {
      std::int64_t r = static_cast<std::int64_t>(
          rng.uniform_index(static_cast<std::uint64_t>(total)));
      if (seen.insert(r).second)
        batch.contrast_pairs.push_back(pair_from_index(d.n(), r));
    }
  }
  return batch;
}

struct LoadStats {
  std::size_t self_loops_dropped = 0;
  std::size_t duplicate_edges_merged = 0;
};

struct LoadResult {
  Dataset data;
  LoadStats stats;
};

namespace detail {

inline bool is_blank_or_comment(const std::string& line) {
  for (char c : line) {
    if (c == '#') return true;
    if (!std::isspace(static_cast<unsigned char>(c))) return false;
  }
  return true;
}

inline std::vector<std::string> split_fields(const std::string& line, char delim) {
  std::vector<std::string> out;
  if (delim == ',') {
    std::string cur;
    for (char c : line) {
      if (c == ',') {
        out.push_back(cur);
        cur.clear();
      } else {
        cur += c;
      }
    }
    out.push_back(cur);
  } else {
    std::istringstream ss(line);
    std::string tok;
    while (ss >> tok) out.push_back(tok);
  }
  return out;
}

inline double parse_double(const std::string& tok, std::size_t line_no) {
  double v = 0.0;
  const char* b = tok.data();
  const char* e = b + tok.size();
  while (b < e && std::isspace(static_cast<unsigned char>(*b))) ++b;
  auto res = std::from_chars(b, e, v);
  if (res.ec != std::errc{} || res.ptr != e)
    throw ParseError("malformed numeric field '" + tok + "'", line_no);
  return v;
}

inline std::int64_t parse_int(const std::string& tok, std::size_t line_no) {
  std::int64_t v = 0;
  const char* b = tok.data();
  const char* e = b + tok.size();
  while (b < e && std::isspace(static_cast<unsigned char>(*b))) ++b;
  auto res = std::from_chars(b, e, v);
  if (res.ec != std::errc{} || res.ptr != e)
    throw ParseError("malformed integer field '" + tok + "'", line_no);
  return v;
}

inline std::string format_double(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

}  // namespace detail

// Features file: delimited numeric text, one row per node; tab/space or
// comma delimited (auto-detected from the first data line). '#' starts a
// comment; blank lines are skipped.
inline std::vector<Eigen::VectorXd> load_features(
    const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open features file: " + path.string());
  std::vector<Eigen::VectorXd> rows;
  std::string line;
  std::size_t line_no = 0;
  char delim = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (detail::is_blank_or_comment(line)) continue;
    if (delim == 0)
      delim = line.find(',') != std::string::npos ? ',' : ' ';
    auto fields = detail::split_fields(line, delim);
    Eigen::VectorXd row(static_cast<Eigen::Index>(fields.size()));
    for (std::size_t k = 0; k < fields.size(); ++k)
      row[static_cast<Eigen::Index>(k)] = detail::parse_double(fields[k], line_no);
    rows.push_back(std::move(row));
  }
  return rows;
}

// Views file: one integer per line, 1-based view tags (converted to 0-based
// in memory).
inline std::vector<int> load_views(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open views file: " + path.string());
  std::vector<int> tags;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (detail::is_blank_or_comment(line)) continue;
    auto v = detail::parse_int(line, line_no);
    if (v < 1) throw ParseError("view tag must be >= 1", line_no);
    tags.push_back(static_cast<int>(v - 1));
  }
  return tags;
}

// Edges file: whitespace-delimited "i j [w]" with 0-based node indices and
// implied w = 1; '#' comments allowed. Duplicate directed edges merge by
// max; self-loops are dropped and counted; explicit w = 0 lines are ignored.
inline LoadResult load_dataset(const std::filesystem::path& features_path,
                               const std::filesystem::path& edges_path,
                               std::optional<std::filesystem::path> views_path =
                                   std::nullopt) {
  auto rows = load_features(features_path);
  std::vector<int> tags;
  int num_views = 1;
  if (views_path) {
    tags = load_views(*views_path);
    if (tags.size() != rows.size())
      throw ValidationError("views file row count (" +
                            std::to_string(tags.size()) +
                            ") != features row count (" +
                            std::to_string(rows.size()) + ")");
    for (int t : tags) num_views = std::max(num_views, t + 1);
  }
  Dataset d(std::move(rows), std::move(tags), num_views);

  std::ifstream in(edges_path);
  if (!in) throw IoError("cannot open edges file: " + edges_path.string());
  LoadStats stats;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (detail::is_blank_or_comment(line)) continue;
    auto fields = detail::split_fields(line, ' ');
    if (fields.size() != 2 && fields.size() != 3)
      throw ParseError("expected 'i j [w]'", line_no);
    std::int64_t i = detail::parse_int(fields[0], line_no);
    std::int64_t j = detail::parse_int(fields[1], line_no);
    std::int64_t w = fields.size() == 3 ? detail::parse_int(fields[2], line_no) : 1;
    if (i < 0 || j < 0 || i >= d.n() || j >= d.n())
      throw ValidationError("edge index out of range at line " +
                            std::to_string(line_no));
    if (w < 0)
      throw ValidationError("negative edge weight at line " +
                            std::to_string(line_no));
    if (i == j) {
      ++stats.self_loops_dropped;
      continue;
    }
    if (w == 0) continue;
    std::int64_t existing = d.weight(static_cast<int>(i), static_cast<int>(j));
    if (existing > 0) ++stats.duplicate_edges_merged;
    d.set_weight(static_cast<int>(i), static_cast<int>(j),
                 std::max(existing, w));
  }
  return LoadResult{std::move(d), stats};
}

// Canonical writers for the formats above. save then load reproduces the
// Dataset exactly (doubles are written with shortest round-trip formatting).
inline void save_dataset(const Dataset& d,
                         const std::filesystem::path& features_path,
                         const std::filesystem::path& edges_path,
                         std::optional<std::filesystem::path> views_path =
                             std::nullopt) {
  {
    std::ofstream out(features_path);
    if (!out) throw IoError("cannot write " + features_path.string());
    for (int i = 0; i < d.n(); ++i) {
      const auto& x = d.feature(i);
      for (Eigen::Index k = 0; k < x.size(); ++k) {
        if (k) out << '\t';
        out << detail::format_double(x[k]);
      }
      out << '\n';
    }
  }
  {
    std::ofstream out(edges_path);
    if (!out) throw IoError("cannot write " + edges_path.string());
    for (const auto& p : d.positive_pairs())
      out << p.i << '\t' << p.j << '\t' << d.weight(p.i, p.j) << '\n';
  }
  if (views_path) {
    std::ofstream out(*views_path);
    if (!out) throw IoError("cannot write " + views_path->string());
    for (int i = 0; i < d.n(); ++i) out << d.view_of(i) + 1 << '\n';
  }
}

}  // namespace bge
