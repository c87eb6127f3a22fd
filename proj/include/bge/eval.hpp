#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include <Eigen/Core>

#include "bge/errors.hpp"
#include "bge/graph_data.hpp"
#include "bge/optimizer.hpp"
#include "bge/rng.hpp"
#include "bge/similarity.hpp"

namespace bge {

// Row i = the trained encoding of node i.
inline Eigen::MatrixXd embed_all(const ModelParams& p, const Dataset& d) {
  Eigen::MatrixXd out(d.n(), p.embed_dim());
  for (int i = 0; i < d.n(); ++i)
    out.row(i) = encode(p, d.view_of(i), d.feature(i)).transpose();
  return out;
}

struct KMeansResult {
  std::vector<int> assignments;
  double inertia = 0.0;
  int restarts_used = 0;
};

namespace detail {

struct LloydOutcome {
  std::vector<int> assign;
  double inertia;
};

inline LloydOutcome lloyd(const Eigen::MatrixXd& y, int k, int max_iters,
                          RngStream& rng) {
  const int n = static_cast<int>(y.rows());

  // k-means++ seeding.
  Eigen::MatrixXd centers(k, y.cols());
  std::vector<double> d2(static_cast<std::size_t>(n),
                         std::numeric_limits<double>::infinity());
  int first = static_cast<int>(rng.uniform_index(static_cast<std::uint64_t>(n)));
  centers.row(0) = y.row(first);
  for (int c = 1; c < k; ++c) {
    double total = 0.0;
    for (int i = 0; i < n; ++i) {
      double dd = (y.row(i) - centers.row(c - 1)).squaredNorm();
      d2[static_cast<std::size_t>(i)] = std::min(d2[static_cast<std::size_t>(i)], dd);
      total += d2[static_cast<std::size_t>(i)];
    }
    int pick = 0;
    if (total > 0.0) {
      double r = rng.uniform() * total;
      double acc = 0.0;
      pick = n - 1;
      for (int i = 0; i < n; ++i) {
        acc += d2[static_cast<std::size_t>(i)];
        if (acc > r) { pick = i; break; }
      }
    } else {
      pick = static_cast<int>(rng.uniform_index(static_cast<std::uint64_t>(n)));
    }
    centers.row(c) = y.row(pick);
  }

  std::vector<int> assign(static_cast<std::size_t>(n), -1);
  std::vector<double> best_d(static_cast<std::size_t>(n));
  for (int iter = 0; iter < max_iters; ++iter) {
    bool changed = false;
    for (int i = 0; i < n; ++i) {
      int arg = 0;
      double best = (y.row(i) - centers.row(0)).squaredNorm();
      for (int c = 1; c < k; ++c) {
        double dd = (y.row(i) - centers.row(c)).squaredNorm();
        if (dd < best) { best = dd; arg = c; }
      }
      if (assign[static_cast<std::size_t>(i)] != arg) changed = true;
      assign[static_cast<std::size_t>(i)] = arg;
      best_d[static_cast<std::size_t>(i)] = best;
    }
    if (!changed && iter > 0) break;
    Eigen::MatrixXd sums = Eigen::MatrixXd::Zero(k, y.cols());
    std::vector<int> counts(static_cast<std::size_t>(k), 0);
    for (int i = 0; i < n; ++i) {
      sums.row(assign[static_cast<std::size_t>(i)]) += y.row(i);
      ++counts[static_cast<std::size_t>(assign[static_cast<std::size_t>(i)])];
    }
    for (int c = 0; c < k; ++c) {
      if (counts[static_cast<std::size_t>(c)] > 0) {
        centers.row(c) = sums.row(c) / counts[static_cast<std::size_t>(c)];
      } else {
        // Re-seed an empty cluster from the point farthest from its center.
        int far = 0;
        for (int i = 1; i < n; ++i)
          if (best_d[static_cast<std::size_t>(i)] > best_d[static_cast<std::size_t>(far)])
            far = i;
        centers.row(c) = y.row(far);
        best_d[static_cast<std::size_t>(far)] = 0.0;
      }
    }
  }

  double inertia = 0.0;
  for (int i = 0; i < n; ++i) {
    int arg = 0;
    double best = (y.row(i) - centers.row(0)).squaredNorm();
    for (int c = 1; c < k; ++c) {
      double dd = (y.row(i) - centers.row(c)).squaredNorm();
      if (dd < best) { best = dd; arg = c; }
    }
    inertia += best;
    assign[static_cast<std::size_t>(i)] = arg;
  }
  return LloydOutcome{std::move(assign), inertia};
}

}  // namespace detail

// Lloyd's algorithm with k-means++ seeding; keeps the lowest-inertia run
// over `restarts` independently seeded restarts (first minimum wins ties).
inline KMeansResult kmeans(const Eigen::MatrixXd& y, int k, std::uint64_t seed,
                           int restarts = 10, int max_iters = 300) {
  const int n = static_cast<int>(y.rows());
  if (k < 1) throw ValidationError("kmeans: k must be >= 1");
  if (k > n) throw ValidationError("kmeans: k exceeds the point count");
  if (restarts < 1) throw ValidationError("kmeans: restarts must be >= 1");
  RngStream base(seed);
  KMeansResult out;
  out.inertia = std::numeric_limits<double>::infinity();
  for (int r = 0; r < restarts; ++r) {
    RngStream stream = base.split(static_cast<std::uint64_t>(r));
    auto run = detail::lloyd(y, k, max_iters, stream);
    if (run.inertia < out.inertia) {
      out.inertia = run.inertia;
      out.assignments = std::move(run.assign);
    }
  }
  out.restarts_used = restarts;
  return out;
}

// Fraction of nodes covered by each predicted cluster's majority class.
inline double purity(const std::vector<int>& pred,
                     const std::vector<int>& truth) {
  if (pred.size() != truth.size() || pred.empty())
    throw ValidationError("purity: label vectors must be equal-length, non-empty");
  std::unordered_map<int, std::unordered_map<int, int>> table;
  for (std::size_t i = 0; i < pred.size(); ++i)
    ++table[pred[i]][truth[i]];
  std::int64_t hit = 0;
  for (const auto& [c, row] : table) {
    int best = 0;
    for (const auto& [t, cnt] : row) best = std::max(best, cnt);
    hit += best;
  }
  return static_cast<double>(hit) / static_cast<double>(pred.size());
}

// Mutual information over the joint label distribution, normalized by the
// arithmetic mean of the two entropies (natural logs). Defined as 0 when
// the mutual information is 0, so degenerate single-cluster inputs score 0.
inline double nmi(const std::vector<int>& pred, const std::vector<int>& truth) {
  if (pred.size() != truth.size() || pred.empty())
    throw ValidationError("nmi: label vectors must be equal-length, non-empty");
  const double n = static_cast<double>(pred.size());
  std::unordered_map<int, int> pc, tc;
  std::unordered_map<std::int64_t, int> joint;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    ++pc[pred[i]];
    ++tc[truth[i]];
    ++joint[(static_cast<std::int64_t>(pred[i]) << 32) ^
            static_cast<std::int64_t>(static_cast<std::uint32_t>(truth[i]))];
  }
  auto entropy = [n](const std::unordered_map<int, int>& counts) {
    double h = 0.0;
    for (const auto& [key, c] : counts) {
      double p = static_cast<double>(c) / n;
      h -= p * std::log(p);
    }
    return h;
  };
  double hp = entropy(pc), ht = entropy(tc);
  double info = 0.0;
  for (const auto& [key, c] : joint) {
    int a = static_cast<int>(key >> 32);
    int b = static_cast<int>(key & 0xffffffff);
    double pj = static_cast<double>(c) / n;
    double pa = static_cast<double>(pc[a]) / n;
    double pb = static_cast<double>(tc[b]) / n;
    info += pj * std::log(pj / (pa * pb));
  }
  if (info <= 0.0) return 0.0;
  double denom = (hp + ht) / 2.0;
  if (denom <= 0.0) return 0.0;
  return std::clamp(info / denom, 0.0, 1.0);
}

struct EvalResult {
  std::vector<int> assignments;
  double purity = 0.0;
  double nmi = 0.0;
  double kmeans_inertia = 0.0;
  int restarts_used = 0;
};

inline EvalResult evaluate_embedding(const ModelParams& p, const Dataset& d,
                                     int k, const std::vector<int>& truth,
                                     std::uint64_t seed, int restarts = 10,
                                     int max_iters = 300) {
  Eigen::MatrixXd y = embed_all(p, d);
  KMeansResult km = kmeans(y, k, seed, restarts, max_iters);
  EvalResult out;
  out.purity = purity(km.assignments, truth);
  out.nmi = nmi(km.assignments, truth);
  out.assignments = std::move(km.assignments);
  out.kmeans_inertia = km.inertia;
  out.restarts_used = km.restarts_used;
  return out;
}

struct CvReport {
  double chosen_beta = 0.0;
  std::vector<double> mean_scores;  // one per candidate, held-out per-pair mean
};

// Picks a beta by pair-holdout cross-validation: the positive pairs plus a
// matched sample of zero pairs are striped into folds; each candidate is
// trained on everything outside the held-out stripe and scored on the
// stripe with the fixed-beta0 full loss, averaged per pair. Smallest mean
// wins; exact ties go to the earlier candidate.
inline CvReport select_beta_cv(const Dataset& d,
                               const std::vector<double>& candidates,
                               double beta0, int folds,
                               const FullBatchConfig& base_cfg,
                               std::vector<EncoderSpec> specs, int embed_dim,
                               std::uint64_t seed) {
  if (candidates.empty())
    throw ValidationError("select_beta_cv: no candidates");
  if (!(beta0 > 0.0))
    throw ValidationError("select_beta_cv: beta0 must be > 0");
  if (folds < 2) throw ValidationError("select_beta_cv: folds must be >= 2");
  const auto& wn = d.positive_pairs();
  if (static_cast<int>(wn.size()) < folds)
    throw ValidationError("select_beta_cv: a fold would have no positive pairs");

  RngStream rng(seed);
  auto shuffled = [](std::size_t count, RngStream stream) {
    std::vector<std::size_t> idx(count);
    for (std::size_t i = 0; i < count; ++i) idx[i] = i;
    for (std::size_t i = count; i > 1; --i) {
      std::size_t j = static_cast<std::size_t>(stream.uniform_index(i));
      std::swap(idx[i - 1], idx[j]);
    }
    return idx;
  };
  std::vector<std::size_t> pos_order = shuffled(wn.size(), rng.split(1));

  // Matched zero-pair sample, capped by availability on tiny graphs.
  const std::int64_t total = d.all_pair_count();
  std::int64_t z_count =
      std::min<std::int64_t>(static_cast<std::int64_t>(wn.size()),
                             total - static_cast<std::int64_t>(wn.size()));
  std::vector<NodePair> zeros;
  std::unordered_set<std::int64_t> seen;
  RngStream zero_stream = rng.split(2);
  while (static_cast<std::int64_t>(zeros.size()) < z_count) {
    std::int64_t r = static_cast<std::int64_t>(
        zero_stream.uniform_index(static_cast<std::uint64_t>(total)));
    NodePair pr = pair_from_index(d.n(), r);
    if (d.weight(pr.i, pr.j) > 0) continue;
    if (seen.insert(r).second) zeros.push_back(pr);
  }

  std::vector<double> fold_sums(candidates.size(), 0.0);
  for (int f = 0; f < folds; ++f) {
    std::vector<NodePair> held;
    std::unordered_set<std::int64_t> held_keys;
    auto hold = [&](NodePair pr) {
      held.push_back(pr);
      held_keys.insert(static_cast<std::int64_t>(pr.i) * d.n() + pr.j);
    };
    for (std::size_t idx = static_cast<std::size_t>(f); idx < pos_order.size();
         idx += static_cast<std::size_t>(folds))
      hold(wn[pos_order[idx]]);
    for (std::size_t idx = static_cast<std::size_t>(f); idx < zeros.size();
         idx += static_cast<std::size_t>(folds))
      hold(zeros[idx]);

    std::vector<NodePair> retained;
    retained.reserve(static_cast<std::size_t>(total) - held.size());
    for (int i = 0; i < d.n(); ++i)
      for (int j = i + 1; j < d.n(); ++j)
        if (!held_keys.count(static_cast<std::int64_t>(i) * d.n() + j))
          retained.push_back(NodePair{i, j});

    ModelParams init(specs, embed_dim);
    RngStream init_stream = rng.split(1000 + static_cast<std::uint64_t>(f));
    random_init(init, init_stream);

    for (std::size_t c = 0; c < candidates.size(); ++c) {
      FullBatchConfig cfg = base_cfg;
      cfg.beta = candidates[c];
      ModelParams trained =
          train_fullbatch(d, specs, embed_dim, cfg, &init, &retained);
      double score = embs_loss(trained, d, beta0, &held).value /
                     static_cast<double>(held.size());
      fold_sums[c] += score;
    }
  }

  CvReport rep;
  rep.mean_scores.resize(candidates.size());
  std::size_t best = 0;
  for (std::size_t c = 0; c < candidates.size(); ++c) {
    rep.mean_scores[c] = fold_sums[c] / static_cast<double>(folds);
    if (rep.mean_scores[c] < rep.mean_scores[best]) best = c;
  }
  rep.chosen_beta = candidates[best];
  return rep;
}

}  // namespace bge
