#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "bge/errors.hpp"
#include "bge/graph_data.hpp"
#include "bge/similarity.hpp"

namespace bge {

struct LossReport {
  double value = 0.0;
  Eigen::VectorXd grad;
  std::int64_t pair_count = 0;
  std::int64_t clamp_events = 0;
};

namespace detail {

// Inner products are clamped to [-kLogMuClamp, kLogMuClamp] inside loss
// evaluation so a bad iterate cannot overflow exp. A clamped pair keeps its
// offset gradient (log mu still responds linearly to gamma) but stops
// pushing the encoder.
constexpr double kLogMuClamp = 50.0;

struct PairTerm {
  double value;
  double coeff;    // d(term)/d(log mu)
  bool clamped;
};

inline PairTerm embs_pair_term(double s, double w, double beta) {
  bool cl = false;
  if (s > kLogMuClamp) { s = kLogMuClamp; cl = true; }
  if (s < -kLogMuClamp) { s = -kLogMuClamp; cl = true; }
  double mb = std::exp(beta * s);
  double m1b = std::exp((1.0 + beta) * s);
  return PairTerm{-w * std::expm1(beta * s) / beta + m1b / (1.0 + beta),
                  -w * mb + m1b, cl};
}

inline PairTerm nll_pair_term(double s, double w) {
  bool cl = false;
  if (s > kLogMuClamp) { s = kLogMuClamp; cl = true; }
  if (s < -kLogMuClamp) { s = -kLogMuClamp; cl = true; }
  double m = std::exp(s);
  return PairTerm{-w * s + m, -w + m, cl};
}

// Shared accumulation loop. term(s, w) gives a pair's value and its
// d/d(log mu) coefficient; pairs are visited in canonical (i, j) order so
// the summation order, and hence the floating-point result, is fixed.
template <typename TermFn>
LossReport accumulate_loss(const ModelParams& p, const Dataset& d,
                           const std::vector<NodePair>* pairs, TermFn term) {
  LossReport rep;
  rep.grad = Eigen::VectorXd::Zero(p.size());
  EncodeCache cache = encode_all(p, d);
  auto one = [&](int i, int j) {
    double s = log_mu_from(p, cache.y[static_cast<std::size_t>(i)],
                           cache.y[static_cast<std::size_t>(j)], d.view_of(i),
                           d.view_of(j));
    if (!std::isfinite(s))
      throw NumericError("non-finite log mu for pair (" + std::to_string(i) +
                             ", " + std::to_string(j) + ")",
                         s, i, j);
    PairTerm t = term(s, static_cast<double>(d.weight(i, j)));
    if (!std::isfinite(t.value) || !std::isfinite(t.coeff))
      throw NumericError("non-finite loss term for pair (" + std::to_string(i) +
                             ", " + std::to_string(j) + ")",
                         s, i, j);
    rep.value += t.value;
    if (t.clamped) ++rep.clamp_events;
    add_logmu_grad(p, d, cache, i, j, t.clamped ? 0.0 : t.coeff, t.coeff,
                   rep.grad);
    ++rep.pair_count;
  };
  if (pairs) {
    for (const auto& pr : *pairs) one(pr.i, pr.j);
  } else {
    for (int i = 0; i < d.n(); ++i)
      for (int j = i + 1; j < d.n(); ++j) one(i, j);
  }
  return rep;
}

// Dense specialization of accumulate_loss for a single linear view over all
// of I_n, where the full score matrix is one GEMM and the encoder gradient
// collapses to Y C X^T with C the (symmetric, zero-diagonal) matrix of pair
// coefficients. Clamped pairs get C entries of zero, matching the frozen
// encoder gradient of the generic path; per-pair terms, clamp counts and
// error reporting are shared with it.
template <typename TermFn>
LossReport linear_loss_all_pairs(const ModelParams& p, const Dataset& d,
                                 TermFn term) {
  const int n = d.n();
  const int in = p.spec(0).in_dim;
  const int K = p.embed_dim();
  LossReport rep;
  rep.grad = Eigen::VectorXd::Zero(p.size());
  Eigen::MatrixXd X(in, n);
  for (int i = 0; i < n; ++i) {
    if (d.feature(i).size() != in)
      throw ValidationError("encode: input dim " +
                            std::to_string(d.feature(i).size()) +
                            " != view dim " + std::to_string(in));
    X.col(i) = d.feature(i);
  }
  ConstMat W(p.theta.data() + p.view_offset(0), K, in);
  Eigen::MatrixXd Y = W * X;
  Eigen::MatrixXd G = Y.transpose() * Y;
  Eigen::MatrixXd wmat = Eigen::MatrixXd::Zero(n, n);
  for (const auto& pr : d.positive_pairs())
    wmat(pr.i, pr.j) = static_cast<double>(d.weight(pr.i, pr.j));
  const int gi = p.gamma_index(0, 0);
  const double gamma = p.theta[gi];
  Eigen::MatrixXd C = Eigen::MatrixXd::Zero(n, n);
  double gamma_sum = 0.0;
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) {
      double s = G(i, j) - gamma;
      if (!std::isfinite(s))
        throw NumericError("non-finite log mu for pair (" + std::to_string(i) +
                               ", " + std::to_string(j) + ")",
                           s, i, j);
      PairTerm t = term(s, wmat(i, j));
      if (!std::isfinite(t.value) || !std::isfinite(t.coeff))
        throw NumericError("non-finite loss term for pair (" +
                               std::to_string(i) + ", " + std::to_string(j) +
                               ")",
                           s, i, j);
      rep.value += t.value;
      if (t.clamped) {
        ++rep.clamp_events;
      } else {
        C(i, j) = t.coeff;
        C(j, i) = t.coeff;
      }
      gamma_sum += t.coeff;
      ++rep.pair_count;
    }
  }
  Eigen::Map<Eigen::MatrixXd>(rep.grad.data() + p.view_offset(0), K, in)
      .noalias() = (Y * C) * X.transpose();
  rep.grad[gi] = -gamma_sum;
  return rep;
}

inline bool use_linear_fast_path(const ModelParams& p, const Dataset& d,
                                 const std::vector<NodePair>* pairs) {
  return pairs == nullptr && d.num_views() == 1 &&
         p.spec(0).kind == EncoderKind::linear;
}

}  // namespace detail

// Empirical moment beta-score over the given pairs (all of I_n by default):
//   sum { -w_ij (mu^beta - 1)/beta + mu^{1+beta}/(1+beta) }.
// Gradient per pair: (-w mu^beta + mu^{1+beta}) d(log mu)/d(theta).
inline LossReport embs_loss(const ModelParams& p, const Dataset& d, double beta,
                            const std::vector<NodePair>* pairs = nullptr) {
  if (!(beta > 0.0))
    throw ValidationError("embs_loss: beta must be > 0 (nll_loss is the beta=0 case)");
  auto term = [beta](double s, double w) {
    return detail::embs_pair_term(s, w, beta);
  };
  if (detail::use_linear_fast_path(p, d, pairs))
    return detail::linear_loss_all_pairs(p, d, term);
  return detail::accumulate_loss(p, d, pairs, term);
}

// Poisson negative log-likelihood over the given pairs, dropping the
// theta-free log(w!) terms: sum { -w_ij log mu + mu }.
inline LossReport nll_loss(const ModelParams& p, const Dataset& d,
                           const std::vector<NodePair>* pairs = nullptr) {
  auto term = [](double s, double w) { return detail::nll_pair_term(s, w); };
  if (detail::use_linear_fast_path(p, d, pairs))
    return detail::linear_loss_all_pairs(p, d, term);
  return detail::accumulate_loss(p, d, pairs, term);
}

// Discrete beta-score between non-negative functions g and f under weights
// nu: -sum g nu (f^beta - 1)/beta + sum nu f^{1+beta}/(1+beta). Minimized
// over f at f = g on the support of nu.
inline double beta_score(const Eigen::VectorXd& g, const Eigen::VectorXd& f,
                         const Eigen::VectorXd& nu, double beta) {
  if (g.size() != f.size() || g.size() != nu.size())
    throw ValidationError("beta_score: length mismatch");
  if (!(beta > 0.0)) throw ValidationError("beta_score: beta must be > 0");
  double acc = 0.0;
  for (Eigen::Index k = 0; k < g.size(); ++k) {
    if (g[k] < 0.0 || f[k] < 0.0 || nu[k] < 0.0)
      throw ValidationError("beta_score: negative input at atom " +
                            std::to_string(k));
    acc += -g[k] * nu[k] * (std::pow(f[k], beta) - 1.0) / beta +
           nu[k] * std::pow(f[k], 1.0 + beta) / (1.0 + beta);
  }
  return acc;
}

struct ProbBetaScore {
  double value = 0.0;
  // Bound on the value's truncation error: the averaged Poisson tail mass
  // beyond w_max, divided by (1+beta).
  double tail_bound = 0.0;
};

// Truncated empirical probability beta-score, averaged over all pairs:
//   (1/|I_n|) sum { -(p(w_ij)^beta - 1)/beta
//                   + sum_{w=0}^{w_max} p(w)^{1+beta}/(1+beta) }
// with p the Poisson pmf at mean mu_theta, computed in log space.
inline ProbBetaScore prob_beta_score(const ModelParams& p, const Dataset& d,
                                     double beta, std::int64_t w_max) {
  if (!(beta > 0.0)) throw ValidationError("prob_beta_score: beta must be > 0");
  std::int64_t observed_max = 0;
  for (const auto& pr : d.positive_pairs())
    observed_max = std::max(observed_max, d.weight(pr.i, pr.j));
  if (w_max < observed_max)
    throw ValidationError("prob_beta_score: w_max " + std::to_string(w_max) +
                          " < max observed weight " +
                          std::to_string(observed_max));

  std::vector<double> log_fact(static_cast<std::size_t>(w_max) + 1);
  for (std::int64_t w = 0; w <= w_max; ++w)
    log_fact[static_cast<std::size_t>(w)] =
        std::lgamma(static_cast<double>(w) + 1.0);

  EncodeCache cache = encode_all(p, d);
  double acc = 0.0;
  double tail = 0.0;
  const std::int64_t total = d.all_pair_count();
  for (int i = 0; i < d.n(); ++i) {
    for (int j = i + 1; j < d.n(); ++j) {
      double s = log_mu_from(p, cache.y[static_cast<std::size_t>(i)],
                             cache.y[static_cast<std::size_t>(j)], d.view_of(i),
                             d.view_of(j));
      double m = std::exp(s);
      if (!std::isfinite(m))
        throw NumericError("mu overflow in prob_beta_score", s, i, j);
      auto log_pmf = [&](std::int64_t w) {
        return -m + static_cast<double>(w) * s -
               log_fact[static_cast<std::size_t>(w)];
      };
      std::int64_t w_obs = d.weight(i, j);
      acc += -std::expm1(beta * log_pmf(w_obs)) / beta;
      double mass = 0.0;
      for (std::int64_t w = 0; w <= w_max; ++w) {
        double lp = log_pmf(w);
        acc += std::exp((1.0 + beta) * lp) / (1.0 + beta);
        mass += std::exp(lp);
      }
      tail += std::max(0.0, 1.0 - mass);
    }
  }
  ProbBetaScore out;
  out.value = acc / static_cast<double>(total);
  out.tail_bound = tail / static_cast<double>(total) / (1.0 + beta);
  if (!std::isfinite(out.value))
    throw NumericError("non-finite prob_beta_score", out.value);
  return out;
}

// A finite contamination scenario: atoms with weights nu (a probability
// vector), clean rates mu_star, noise rates eta_star, plus the analysis
// constants (beta, beta0, epsilon). Feature pairs are optional; when
// present they let mu_theta be computed from a single-view model.
struct NoiseScenario {
  std::vector<std::pair<Eigen::VectorXd, Eigen::VectorXd>> sample_pairs;
  Eigen::VectorXd nu;
  Eigen::VectorXd mu_star;
  Eigen::VectorXd eta_star;
  double beta = 0.5;
  double beta0 = 1.0;
  double epsilon = 1.0;

  void validate() const {
    if (nu.size() == 0) throw ValidationError("NoiseScenario: empty");
    if (mu_star.size() != nu.size() || eta_star.size() != nu.size())
      throw ValidationError("NoiseScenario: length mismatch");
    if (!sample_pairs.empty() &&
        static_cast<Eigen::Index>(sample_pairs.size()) != nu.size())
      throw ValidationError("NoiseScenario: sample_pairs length mismatch");
    double total = 0.0;
    for (Eigen::Index k = 0; k < nu.size(); ++k) {
      if (nu[k] < 0.0 || mu_star[k] < 0.0 || eta_star[k] < 0.0)
        throw ValidationError("NoiseScenario: negative entry at atom " +
                              std::to_string(k));
      total += nu[k];
    }
    if (std::abs(total - 1.0) > 1e-12)
      throw ValidationError("NoiseScenario: nu must sum to 1");
    if (!(beta > 0.0) || !(beta0 >= beta))
      throw ValidationError("NoiseScenario: need 0 < beta <= beta0");
    if (!(epsilon > 0.0)) throw ValidationError("NoiseScenario: epsilon <= 0");
  }

  // Total noise mass alpha = sum nu eta_star.
  double alpha() const { return nu.dot(eta_star); }
};

struct DecompositionReport {
  double u_g = 0.0;          // score of the contaminated target mu_star + eta_star
  double u_star = 0.0;       // score of the clean target mu_star
  double alpha = 0.0;
  double alpha_over_beta = 0.0;
  double M = 0.0;
  double bound = 0.0;        // alpha^{1 - beta/beta0} / beta
  double identity_gap = 0.0; // |u_g - (u_star + alpha/beta - M eps^{beta/beta0})|, relative
  bool in_theta_eps = false; // sum nu eta_star mu_theta^{beta0} < epsilon
  bool bound_holds = false;  // M <= bound; meaningful only when in_theta_eps
};

// Splits the score of the contaminated target into the clean score, the
// constant alpha/beta, and the correction M(theta) eps^{beta/beta0}. The
// identity is exact algebra over the finite atom sums; the Lyapunov bound
// on M applies whenever theta lies in the epsilon-constrained region.
inline DecompositionReport theorem1_decomposition(const NoiseScenario& s,
                                                  const Eigen::VectorXd& mu_theta) {
  s.validate();
  if (mu_theta.size() != s.nu.size())
    throw ValidationError("theorem1_decomposition: mu_theta length mismatch");
  for (Eigen::Index k = 0; k < mu_theta.size(); ++k)
    if (!(mu_theta[k] >= 0.0) || !std::isfinite(mu_theta[k]))
      throw ValidationError("theorem1_decomposition: invalid mu_theta at atom " +
                            std::to_string(k));

  DecompositionReport r;
  r.u_g = beta_score(s.mu_star + s.eta_star, mu_theta, s.nu, s.beta);
  r.u_star = beta_score(s.mu_star, mu_theta, s.nu, s.beta);
  r.alpha = s.alpha();
  r.alpha_over_beta = r.alpha / s.beta;

  double ratio = s.beta / s.beta0;
  double noise_moment = 0.0;   // sum nu eta_star mu_theta^beta
  double lyapunov_moment = 0.0;  // sum nu eta_star mu_theta^beta0
  for (Eigen::Index k = 0; k < mu_theta.size(); ++k) {
    noise_moment += s.nu[k] * s.eta_star[k] * std::pow(mu_theta[k], s.beta);
    lyapunov_moment += s.nu[k] * s.eta_star[k] * std::pow(mu_theta[k], s.beta0);
  }
  double eps_pow = std::pow(s.epsilon, ratio);
  r.M = noise_moment / s.beta / eps_pow;
  r.bound = std::pow(r.alpha, 1.0 - ratio) / s.beta;
  r.in_theta_eps = lyapunov_moment < s.epsilon;
  r.bound_holds = r.M <= r.bound * (1.0 + 1e-12) + 1e-300;

  double rhs = r.u_star + r.alpha_over_beta - r.M * eps_pow;
  r.identity_gap = std::abs(r.u_g - rhs) / std::max(1.0, std::abs(r.u_g));
  return r;
}

// Overload computing mu_theta from a single-view model applied to the
// scenario's feature pairs.
inline DecompositionReport theorem1_decomposition(const NoiseScenario& s,
                                                  const ModelParams& p) {
  s.validate();
  if (s.sample_pairs.empty())
    throw ValidationError("theorem1_decomposition: scenario has no feature pairs");
  Eigen::VectorXd mu_theta(s.nu.size());
  for (Eigen::Index k = 0; k < s.nu.size(); ++k) {
    const auto& [xa, xb] = s.sample_pairs[static_cast<std::size_t>(k)];
    double lm = log_mu_from(p, encode(p, 0, xa), encode(p, 0, xb), 0, 0);
    mu_theta[k] = std::exp(lm);
    if (!std::isfinite(mu_theta[k]))
      throw NumericError("mu overflow in theorem1_decomposition", lm,
                         static_cast<long long>(k), -1);
  }
  return theorem1_decomposition(s, mu_theta);
}

}  // namespace bge
