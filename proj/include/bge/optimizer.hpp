#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "bge/errors.hpp"
#include "bge/graph_data.hpp"
#include "bge/rng.hpp"
#include "bge/scores.hpp"
#include "bge/similarity.hpp"

namespace bge {

// Euclidean projection onto the ball of the given radius around center.
inline Eigen::VectorXd project(const Eigen::VectorXd& theta,
                               const Eigen::VectorXd& center, double radius) {
  if (!(radius > 0.0)) throw ValidationError("project: radius must be > 0");
  if (theta.size() != center.size())
    throw ValidationError("project: dimension mismatch");
  Eigen::VectorXd diff = theta - center;
  double norm = diff.norm();
  if (norm <= radius) return theta;
  return center + (radius / norm) * diff;
}

// Minibatch surrogate loss
//   h = -sum_{W-batch} w_ij (mu^beta - 1)/beta
//       + lambda sum_{I-batch} mu^{1+beta}/(1+beta),
// with the same clamping policy as the full-batch losses. Batch pairs are
// visited in list order, positives first, so the sum order is fixed.
inline LossReport stoch_loss(const ModelParams& p, const Dataset& d,
                             const PairBatch& batch, double beta,
                             double lambda) {
  if (!(beta > 0.0)) throw ValidationError("stoch_loss: beta must be > 0");
  if (lambda < 0.0) throw ValidationError("stoch_loss: lambda must be >= 0");
  LossReport rep;
  rep.grad = Eigen::VectorXd::Zero(p.size());
  EncodeCache cache = encode_all(p, d);
  auto log_mu_of = [&](const NodePair& pr) {
    double s = log_mu_from(p, cache.y[static_cast<std::size_t>(pr.i)],
                           cache.y[static_cast<std::size_t>(pr.j)],
                           d.view_of(pr.i), d.view_of(pr.j));
    if (!std::isfinite(s))
      throw NumericError("non-finite log mu for pair (" +
                             std::to_string(pr.i) + ", " +
                             std::to_string(pr.j) + ")",
                         s, pr.i, pr.j);
    return s;
  };
  for (const auto& pr : batch.positive_pairs) {
    double s = log_mu_of(pr);
    bool cl = false;
    if (s > detail::kLogMuClamp) { s = detail::kLogMuClamp; cl = true; }
    if (s < -detail::kLogMuClamp) { s = -detail::kLogMuClamp; cl = true; }
    double w = static_cast<double>(d.weight(pr.i, pr.j));
    double coeff = -w * std::exp(beta * s);
    rep.value += -w * std::expm1(beta * s) / beta;
    if (cl) ++rep.clamp_events;
    add_logmu_grad(p, d, cache, pr.i, pr.j, cl ? 0.0 : coeff, coeff, rep.grad);
    ++rep.pair_count;
  }
  for (const auto& pr : batch.contrast_pairs) {
    double s = log_mu_of(pr);
    bool cl = false;
    if (s > detail::kLogMuClamp) { s = detail::kLogMuClamp; cl = true; }
    if (s < -detail::kLogMuClamp) { s = -detail::kLogMuClamp; cl = true; }
    double coeff = lambda * std::exp((1.0 + beta) * s);
    rep.value += lambda * std::exp((1.0 + beta) * s) / (1.0 + beta);
    if (cl) ++rep.clamp_events;
    add_logmu_grad(p, d, cache, pr.i, pr.j, cl ? 0.0 : coeff, coeff, rep.grad);
    ++rep.pair_count;
  }
  if (!std::isfinite(rep.value))
    throw NumericError("non-finite stochastic loss", rep.value);
  return rep;
}

// Contrast-to-positive ratio v = |I_n| / |W_n|.
inline double contrast_ratio(const Dataset& d) {
  if (d.positive_count() == 0)
    throw ValidationError("contrast_ratio: dataset has no positive pairs");
  return static_cast<double>(d.all_pair_count()) /
         static_cast<double>(d.positive_count());
}

// The lambda at which the stochastic updates target the full-batch loss
// exactly: lambda = v m1 / m2.
inline double default_lambda(const Dataset& d, std::int64_t m1,
                             std::int64_t m2) {
  if (m2 == 0) return 1.0;
  return contrast_ratio(d) * static_cast<double>(m1) /
         static_cast<double>(m2);
}

struct SGDConfig {
  double beta = 0.5;
  std::optional<double> lambda;  // defaults to v m1 / m2
  std::int64_t m1 = 32;
  std::int64_t m2 = 64;
  double delta0 = 0.01;
  double alpha_exp = 0.6;
  std::int64_t iters = 2000;
  Eigen::VectorXd theta_center;  // empty = zero vector
  double radius = 10.0;
  std::uint64_t seed = 1;
  std::int64_t eval_every = 100;
  bool gamma_only = false;       // freeze encoder blocks, train offsets only
  bool record_full_loss = false;

  void validate() const {
    if (!(beta > 0.0)) throw ValidationError("SGDConfig: beta must be > 0");
    if (lambda && !(*lambda > 0.0))
      throw ValidationError("SGDConfig: lambda must be > 0");
    if (m1 < 0 || m2 < 0 || m1 + m2 < 1)
      throw ValidationError("SGDConfig: need m1, m2 >= 0 and m1 + m2 >= 1");
    if (delta0 < 0.0) throw ValidationError("SGDConfig: delta0 must be >= 0");
    if (!(alpha_exp > 0.0) || alpha_exp > 1.0)
      throw ValidationError("SGDConfig: alpha_exp must lie in (0, 1]");
    if (iters < 0) throw ValidationError("SGDConfig: iters must be >= 0");
    if (!(radius > 0.0)) throw ValidationError("SGDConfig: radius must be > 0");
    if (eval_every < 1) throw ValidationError("SGDConfig: eval_every must be >= 1");
  }
};

struct TrajectoryRecord {
  std::int64_t t = 0;          // iterations completed
  Eigen::VectorXd theta;
  double stoch_value = 0.0;    // h at the batch that produced this iterate
  std::optional<double> full_loss;
  std::int64_t proj_hits = 0;  // cumulative projection activations
};

struct Trajectory {
  std::vector<TrajectoryRecord> records;
  Eigen::VectorXd final_theta;
  std::int64_t projection_hits = 0;
  std::int64_t clamp_events = 0;
};

// Projected minibatch descent: theta <- P(theta - delta_t grad h), with
// delta_t = delta0 / (1+t)^alpha_exp and a fresh batch each iteration.
// Bit-reproducible for a fixed config.
inline Trajectory train_sgd(const Dataset& d, std::vector<EncoderSpec> specs,
                            int embed_dim, const SGDConfig& cfg) {
  cfg.validate();
  if (cfg.m1 > d.positive_count())
    throw ValidationError("train_sgd: m1 exceeds the positive pair count");
  if (cfg.m2 > d.all_pair_count())
    throw ValidationError("train_sgd: m2 exceeds the total pair count");
  ModelParams p(std::move(specs), embed_dim);
  Eigen::VectorXd center = cfg.theta_center.size() == 0
                               ? Eigen::VectorXd::Zero(p.size())
                               : cfg.theta_center;
  if (center.size() != p.size())
    throw ValidationError("train_sgd: theta_center length " +
                          std::to_string(center.size()) + " != |theta| " +
                          std::to_string(p.size()));
  double lambda = cfg.lambda ? *cfg.lambda : default_lambda(d, cfg.m1, cfg.m2);
  p.theta = project(center, center, cfg.radius);

  Trajectory traj;
  RngStream rng(cfg.seed);
  for (std::int64_t t = 0; t < cfg.iters; ++t) {
    PairBatch batch = sample_batch(d, cfg.m1, cfg.m2, rng);
    LossReport rep;
    try {
      rep = stoch_loss(p, d, batch, cfg.beta, lambda);
    } catch (const NumericError& e) {
      throw NumericError("train_sgd aborted at iteration " + std::to_string(t) +
                             ": " + e.what(),
                         e.detail, e.pair_i, e.pair_j);
    }
    traj.clamp_events += rep.clamp_events;
    if (cfg.gamma_only) rep.grad.head(p.psi_size()).setZero();
    double delta = cfg.delta0 / std::pow(1.0 + static_cast<double>(t),
                                         cfg.alpha_exp);
    Eigen::VectorXd stepped = p.theta - delta * rep.grad;
    if ((stepped - center).norm() > cfg.radius) ++traj.projection_hits;
    p.theta = project(stepped, center, cfg.radius);
    if ((t + 1) % cfg.eval_every == 0 || t + 1 == cfg.iters) {
      TrajectoryRecord rec;
      rec.t = t + 1;
      rec.theta = p.theta;
      rec.stoch_value = rep.value;
      if (cfg.record_full_loss)
        rec.full_loss = embs_loss(p, d, cfg.beta).value;
      rec.proj_hits = traj.projection_hits;
      traj.records.push_back(std::move(rec));
    }
  }
  traj.final_theta = p.theta;
  return traj;
}

struct FullBatchConfig {
  double beta = 0.5;     // 0 selects the log-likelihood loss
  double ridge = 1e-4;   // applied to encoder blocks only
  std::int64_t max_iters = 500;
  double tol = 1e-5;     // gradient norm target
  bool gamma_only = false;

  void validate() const {
    if (beta < 0.0) throw ValidationError("FullBatchConfig: beta must be >= 0");
    if (ridge < 0.0) throw ValidationError("FullBatchConfig: ridge must be >= 0");
    if (max_iters < 0) throw ValidationError("FullBatchConfig: max_iters < 0");
    if (!(tol > 0.0)) throw ValidationError("FullBatchConfig: tol must be > 0");
  }
};

// Deterministic trainer: gradient descent with Armijo backtracking on the
// full-batch loss plus ridge on the encoder blocks. Stops when the gradient
// norm reaches tol or after max_iters accepted steps. The loss sequence
// over accepted steps is non-increasing.
inline ModelParams train_fullbatch(const Dataset& d,
                                   std::vector<EncoderSpec> specs,
                                   int embed_dim, const FullBatchConfig& cfg,
                                   const ModelParams* init = nullptr,
                                   const std::vector<NodePair>* pairs = nullptr,
                                   std::vector<double>* loss_trace = nullptr) {
  cfg.validate();
  ModelParams p(std::move(specs), embed_dim);
  if (init) {
    if (init->theta.size() != p.size())
      throw ValidationError("train_fullbatch: init length mismatch");
    p.theta = init->theta;
  }
  auto objective = [&](ModelParams& m) {
    LossReport rep = cfg.beta == 0.0 ? nll_loss(m, d, pairs)
                                     : embs_loss(m, d, cfg.beta, pairs);
    if (cfg.ridge > 0.0) {
      auto psi = m.theta.head(m.psi_size());
      rep.value += cfg.ridge * psi.squaredNorm();
      rep.grad.head(m.psi_size()) += 2.0 * cfg.ridge * psi;
    }
    if (cfg.gamma_only) rep.grad.head(m.psi_size()).setZero();
    return rep;
  };

  const double c1 = 1e-4;
  LossReport cur = objective(p);
  if (loss_trace) loss_trace->push_back(cur.value);
  // First trial step is scaled to the gradient so the backtracking window
  // covers badly scaled starts; later iterations warm-start from the last
  // accepted step.
  double step = 0.5 / (1.0 + cur.grad.norm());
  for (std::int64_t it = 0; it < cfg.max_iters; ++it) {
    double gnorm2 = cur.grad.squaredNorm();
    if (std::sqrt(gnorm2) <= cfg.tol) break;
    double delta = std::min(2.0 * step, 1.0);
    ModelParams trial = p;
    bool accepted = false;
    for (int halving = 0; halving <= 60; ++halving) {
      trial.theta = p.theta - delta * cur.grad;
      LossReport next = objective(trial);
      if (next.value <= cur.value - c1 * delta * gnorm2) {
        p.theta = trial.theta;
        cur = std::move(next);
        step = delta;
        accepted = true;
        break;
      }
      delta *= 0.5;
    }
    if (!accepted)
      throw NumericError(
          "train_fullbatch: no descent after 60 halvings at iteration " +
              std::to_string(it) + " (loss " + std::to_string(cur.value) +
              ", grad norm " + std::to_string(std::sqrt(gnorm2)) + ")",
          cur.value);
    if (loss_trace) loss_trace->push_back(cur.value);
  }
  return p;
}

// Left-hand side of the estimating equation at params:
//   sum_{I_n} (-v m1 w_ij + lambda m2 mu) mu^beta d(log mu)/d(theta),
// with v = |I_n| / |W_n|. Its root is the stochastic algorithm's target.
inline Eigen::VectorXd estimating_lhs(const ModelParams& p, const Dataset& d,
                                      double beta, double lambda,
                                      std::int64_t m1, std::int64_t m2) {
  if (d.positive_count() == 0)
    throw ValidationError("estimating_lhs: dataset has no positive pairs");
  double v = contrast_ratio(d);
  Eigen::VectorXd lhs = Eigen::VectorXd::Zero(p.size());
  EncodeCache cache = encode_all(p, d);
  for (int i = 0; i < d.n(); ++i) {
    for (int j = i + 1; j < d.n(); ++j) {
      double s = log_mu_from(p, cache.y[static_cast<std::size_t>(i)],
                             cache.y[static_cast<std::size_t>(j)], d.view_of(i),
                             d.view_of(j));
      bool cl = false;
      if (s > detail::kLogMuClamp) { s = detail::kLogMuClamp; cl = true; }
      if (s < -detail::kLogMuClamp) { s = -detail::kLogMuClamp; cl = true; }
      double mu_b = std::exp(beta * s);
      double mu_v = std::exp(s);
      double w = static_cast<double>(d.weight(i, j));
      double coeff =
          (-v * static_cast<double>(m1) * w +
           lambda * static_cast<double>(m2) * mu_v) * mu_b;
      if (!std::isfinite(coeff))
        throw NumericError("non-finite estimating term", s, i, j);
      add_logmu_grad(p, d, cache, i, j, cl ? 0.0 : coeff, coeff, lhs);
    }
  }
  return lhs;
}

inline double estimating_residual(const ModelParams& p, const Dataset& d,
                                  double beta, double lambda, std::int64_t m1,
                                  std::int64_t m2) {
  return estimating_lhs(p, d, beta, lambda, m1, m2).norm();
}

// Exact expectation of the stochastic gradient over every possible batch,
// by exhaustive enumeration of m1-subsets of W_n times m2-subsets of I_n.
// Deliberately brute force; guarded so the batch count stays enumerable.
inline Eigen::VectorXd expected_stoch_grad(const ModelParams& p,
                                           const Dataset& d, double beta,
                                           double lambda, std::int64_t m1,
                                           std::int64_t m2) {
  const auto& wn = d.positive_pairs();
  const std::int64_t nw = static_cast<std::int64_t>(wn.size());
  const std::int64_t ni = d.all_pair_count();
  if (m1 < 0 || m1 > nw || m2 < 0 || m2 > ni)
    throw ValidationError("expected_stoch_grad: batch sizes out of range");
  auto choose = [](std::int64_t n, std::int64_t k) {
    double c = 1.0;
    for (std::int64_t t = 0; t < k; ++t)
      c *= static_cast<double>(n - t) / static_cast<double>(t + 1);
    return c;
  };
  double batches = choose(nw, m1) * choose(ni, m2);
  if (batches > 1e6)
    throw ValidationError("expected_stoch_grad: " + std::to_string(batches) +
                          " batches exceed the enumeration guard");

  auto next_combination = [](std::vector<std::int64_t>& c, std::int64_t n) {
    std::int64_t k = static_cast<std::int64_t>(c.size());
    for (std::int64_t pos = k - 1; pos >= 0; --pos) {
      if (c[static_cast<std::size_t>(pos)] < n - (k - pos)) {
        ++c[static_cast<std::size_t>(pos)];
        for (std::int64_t q = pos + 1; q < k; ++q)
          c[static_cast<std::size_t>(q)] = c[static_cast<std::size_t>(q - 1)] + 1;
        return true;
      }
    }
    return false;
  };

  Eigen::VectorXd mean = Eigen::VectorXd::Zero(p.size());
  std::int64_t count = 0;
  std::vector<std::int64_t> wi(static_cast<std::size_t>(m1));
  for (std::int64_t k = 0; k < m1; ++k) wi[static_cast<std::size_t>(k)] = k;
  bool more_w = true;
  while (more_w) {
    std::vector<std::int64_t> ci(static_cast<std::size_t>(m2));
    for (std::int64_t k = 0; k < m2; ++k) ci[static_cast<std::size_t>(k)] = k;
    bool more_c = true;
    while (more_c) {
      PairBatch batch;
      for (auto k : wi) batch.positive_pairs.push_back(wn[static_cast<std::size_t>(k)]);
      for (auto k : ci) batch.contrast_pairs.push_back(pair_from_index(d.n(), k));
      mean += stoch_loss(p, d, batch, beta, lambda).grad;
      ++count;
      more_c = next_combination(ci, ni);
    }
    more_w = next_combination(wi, nw);
  }
  return mean / static_cast<double>(count);
}

}  // namespace bge
