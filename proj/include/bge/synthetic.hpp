#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "bge/errors.hpp"
#include "bge/graph_data.hpp"
#include "bge/rng.hpp"

namespace bge {

// Four-cluster benchmark family: latent cluster centers pushed through a
// random linear map into R^p, isotropic Gaussian noise, a common rescale
// fixing the mean norm, and Bernoulli links (dense within clusters, rate
// xi across them).
struct SyntheticConfig {
  int n = 200;
  int p = 20;
  int latent_dim = 5;
  int clusters = 4;
  double within_prob = 0.05;
  double xi = 0.01;
  double target_mean_norm = 4.0;
  std::uint64_t seed = 1;

  int per_cluster() const { return n / clusters; }

  void validate() const {
    if (n < 1 || p < 1 || latent_dim < 1 || clusters < 1)
      throw ValidationError("SyntheticConfig: sizes must be >= 1");
    if (n % clusters != 0)
      throw ValidationError("SyntheticConfig: clusters must divide n");
    if (within_prob < 0.0 || within_prob > 1.0 || xi < 0.0 || xi > 1.0)
      throw ValidationError("SyntheticConfig: probabilities must lie in [0, 1]");
    if (!(target_mean_norm > 0.0))
      throw ValidationError("SyntheticConfig: target_mean_norm must be > 0");
  }
};

struct SyntheticResult {
  Dataset data;
  std::vector<int> labels;  // 0-based cluster ids, per_cluster() nodes each
};

// Fixed draw order (so a seed pins the dataset): cluster centers in cluster
// order, the map row by row, each data vector in index order, then one
// Bernoulli draw per upper-triangle pair in row-major order. All vectors
// are rescaled by a single common factor so the mean norm hits the target;
// self-weights stay zero by construction.
inline SyntheticResult generate(const SyntheticConfig& cfg) {
  cfg.validate();
  RngStream rng(cfg.seed);

  std::vector<Eigen::VectorXd> centers(static_cast<std::size_t>(cfg.clusters));
  for (auto& c : centers) {
    c.resize(cfg.latent_dim);
    for (int k = 0; k < cfg.latent_dim; ++k) c[k] = rng.normal();
  }
  Eigen::MatrixXd map(cfg.p, cfg.latent_dim);
  for (int r = 0; r < cfg.p; ++r)
    for (int c = 0; c < cfg.latent_dim; ++c) map(r, c) = rng.normal();

  std::vector<int> labels(static_cast<std::size_t>(cfg.n));
  std::vector<Eigen::VectorXd> x(static_cast<std::size_t>(cfg.n));
  double norm_sum = 0.0;
  for (int i = 0; i < cfg.n; ++i) {
    int k = i / cfg.per_cluster();
    labels[static_cast<std::size_t>(i)] = k;
    Eigen::VectorXd v = map * centers[static_cast<std::size_t>(k)];
    for (int r = 0; r < cfg.p; ++r) v[r] += rng.normal();
    norm_sum += v.norm();
    x[static_cast<std::size_t>(i)] = std::move(v);
  }
  if (!(norm_sum > 0.0))
    throw NumericError("generate: degenerate data (zero total norm)", norm_sum);
  double scale = cfg.target_mean_norm * static_cast<double>(cfg.n) / norm_sum;
  for (auto& v : x) v *= scale;

  Dataset d(std::move(x));
  for (int i = 0; i < cfg.n; ++i) {
    for (int j = i + 1; j < cfg.n; ++j) {
      double pr = labels[static_cast<std::size_t>(i)] ==
                          labels[static_cast<std::size_t>(j)]
                      ? cfg.within_prob
                      : cfg.xi;
      if (rng.uniform() < pr) d.set_weight(i, j, 1);
    }
  }
  return SyntheticResult{std::move(d), std::move(labels)};
}

// Expected positive-link counts implied by the config; used as a sanity
// reference against realized counts.
inline std::pair<double, double> expected_link_counts(const SyntheticConfig& cfg) {
  cfg.validate();
  double per = static_cast<double>(cfg.per_cluster());
  double within_pairs = static_cast<double>(cfg.clusters) * per * (per - 1.0) / 2.0;
  double cross_pairs =
      static_cast<double>(pair_count(cfg.n)) - within_pairs;
  return {cfg.within_prob * within_pairs, cfg.xi * cross_pairs};
}

}  // namespace bge
