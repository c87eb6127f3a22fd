#include "bge/optimizer.hpp"

#include <cmath>
#include <vector>

#include <gtest/gtest.h>

#include "bge/graph_data.hpp"
#include "bge/rng.hpp"
#include "bge/scores.hpp"
#include "bge/similarity.hpp"
#include "oracles.hpp"

namespace {

using bge::EncoderKind;
using bge::EncoderSpec;
using bge::ModelParams;

bge::Dataset toy_graph(int n, int dim, bge::RngStream& rng, int positives) {
  std::vector<Eigen::VectorXd> rows;
  for (int i = 0; i < n; ++i) {
    Eigen::VectorXd v(dim);
    for (int k = 0; k < dim; ++k) v[k] = 0.6 * rng.normal();
    rows.push_back(v);
  }
  bge::Dataset d(std::move(rows));
  bge::RngStream links = rng.split(777);
  int placed = 0;
  while (placed < positives) {
    int i = static_cast<int>(links.uniform_index(static_cast<std::uint64_t>(n)));
    int j = static_cast<int>(links.uniform_index(static_cast<std::uint64_t>(n)));
    if (i == j || d.weight(i, j) > 0) continue;
    d.set_weight(i, j, 1 + static_cast<std::int64_t>(links.uniform_index(2)));
    ++placed;
  }
  return d;
}

TEST(Project, InsideUnchangedOutsideScaled) {
  Eigen::VectorXd center = Eigen::VectorXd::Zero(2);
  Eigen::VectorXd inside(2);
  inside << 0.3, -0.4;
  EXPECT_TRUE(bge::project(inside, center, 1.0) == inside);
  Eigen::VectorXd outside(2);
  outside << 3.0, 4.0;
  Eigen::VectorXd proj = bge::project(outside, center, 1.0);
  EXPECT_NEAR(proj[0], 0.6, 1e-15);
  EXPECT_NEAR(proj[1], 0.8, 1e-15);
}

TEST(Project, IdempotentOnRandomPoints) {
  bge::RngStream rng(41);
  for (int rep = 0; rep < 20; ++rep) {
    Eigen::VectorXd x(5), c(5);
    for (int k = 0; k < 5; ++k) {
      x[k] = 10.0 * rng.normal();
      c[k] = rng.normal();
    }
    double radius = 0.5 + 2.0 * rng.uniform();
    Eigen::VectorXd once = bge::project(x, c, radius);
    Eigen::VectorXd twice = bge::project(once, c, radius);
    ASSERT_LT((once - twice).norm(), 1e-12);
    ASSERT_LE((once - c).norm(), radius + 1e-12);
  }
}

TEST(Project, Validation) {
  Eigen::VectorXd x = Eigen::VectorXd::Zero(3);
  EXPECT_THROW(bge::project(x, x, 0.0), bge::ValidationError);
  EXPECT_THROW(bge::project(x, Eigen::VectorXd::Zero(2), 1.0),
               bge::ValidationError);
}

TEST(StochLoss, FullBatchesWithUnitLambdaEqualFullLoss) {
  bge::RngStream rng(42);
  bge::Dataset d = toy_graph(5, 3, rng, 4);
  ModelParams p({{EncoderKind::linear, 3, 0}}, 2);
  bge::RngStream init = rng.split(0);
  bge::random_init(p, init);

  bge::PairBatch batch;
  batch.positive_pairs = d.positive_pairs();
  for (int i = 0; i < d.n(); ++i)
    for (int j = i + 1; j < d.n(); ++j)
      batch.contrast_pairs.push_back({i, j});

  for (double beta : {0.2, 1.0}) {
    auto full = bge::embs_loss(p, d, beta);
    auto stoch = bge::stoch_loss(p, d, batch, beta, 1.0);
    ASSERT_NEAR(stoch.value, full.value,
                1e-12 * std::max(1.0, std::abs(full.value)));
    ASSERT_LT((stoch.grad - full.grad).cwiseAbs().maxCoeff(),
              1e-12 * std::max(1.0, full.grad.cwiseAbs().maxCoeff()));
  }
}

TEST(StochLoss, EmptyContrastBatchIsPureAttraction) {
  bge::RngStream rng(43);
  bge::Dataset d = toy_graph(5, 3, rng, 3);
  ModelParams p({{EncoderKind::linear, 3, 0}}, 2);
  bge::RngStream init = rng.split(0);
  bge::random_init(p, init);
  bge::PairBatch batch;
  batch.positive_pairs = d.positive_pairs();
  double beta = 0.5;
  auto rep = bge::stoch_loss(p, d, batch, beta, 3.0);
  double want = 0.0;
  for (auto pr : d.positive_pairs()) {
    double m = std::exp(oracles::reference_log_mu(p, d, pr.i, pr.j));
    want += -static_cast<double>(d.weight(pr.i, pr.j)) *
            (std::pow(m, beta) - 1.0) / beta;
  }
  EXPECT_NEAR(rep.value, want, 1e-12 * std::max(1.0, std::abs(want)));
}

TEST(StochLoss, RandomBatchMatchesOracleAndFiniteDifferences) {
  bge::RngStream rng(44);
  bge::Dataset d = toy_graph(6, 3, rng, 5);
  ModelParams p({{EncoderKind::mlp1, 3, 3}}, 2);
  bge::RngStream init = rng.split(0);
  bge::random_init(p, init);
  for (int k = p.psi_size(); k < p.size(); ++k) p.theta[k] = 0.3 * rng.normal();

  bge::RngStream sampler = rng.split(9);
  auto batch = bge::sample_batch(d, 3, 6, sampler);
  double beta = 0.7, lambda = 2.5;
  auto rep = bge::stoch_loss(p, d, batch, beta, lambda);

  auto oracle_value = [&](const ModelParams& m) {
    double acc = 0.0;
    for (auto pr : batch.positive_pairs) {
      double mu = std::exp(oracles::reference_log_mu(m, d, pr.i, pr.j));
      acc += -static_cast<double>(d.weight(pr.i, pr.j)) *
             (std::pow(mu, beta) - 1.0) / beta;
    }
    for (auto pr : batch.contrast_pairs) {
      double mu = std::exp(oracles::reference_log_mu(m, d, pr.i, pr.j));
      acc += lambda * std::pow(mu, 1.0 + beta) / (1.0 + beta);
    }
    return acc;
  };
  EXPECT_NEAR(rep.value, oracle_value(p),
              1e-12 * std::max(1.0, std::abs(rep.value)));
  ModelParams probe = p;
  auto fd = oracles::fd_gradient(
      [&](const Eigen::VectorXd& t) {
        probe.theta = t;
        return oracle_value(probe);
      },
      p.theta);
  EXPECT_LT(oracles::max_rel_err(rep.grad, fd), 1e-5);
}

TEST(StochLoss, Validation) {
  bge::RngStream rng(45);
  bge::Dataset d = toy_graph(4, 2, rng, 2);
  ModelParams p({{EncoderKind::linear, 2, 0}}, 2);
  bge::PairBatch batch;
  EXPECT_THROW(bge::stoch_loss(p, d, batch, 0.0, 1.0), bge::ValidationError);
  EXPECT_THROW(bge::stoch_loss(p, d, batch, 0.5, -1.0), bge::ValidationError);
}

TEST(ExpectedStochGrad, MatchesClosedFormOnTinyGraph) {
  bge::RngStream rng(46);
  bge::Dataset d = toy_graph(4, 3, rng, 3);
  ModelParams p({{EncoderKind::linear, 3, 0}}, 2);
  bge::RngStream init = rng.split(0);
  bge::random_init(p, init);
  double beta = 0.5, lambda = 1.7;
  std::int64_t m1 = 1, m2 = 2;

  Eigen::VectorXd mean = bge::expected_stoch_grad(p, d, beta, lambda, m1, m2);

  bge::PairBatch wn_only;
  wn_only.positive_pairs = d.positive_pairs();
  bge::PairBatch in_only;
  for (int i = 0; i < d.n(); ++i)
    for (int j = i + 1; j < d.n(); ++j) in_only.contrast_pairs.push_back({i, j});
  Eigen::VectorXd attraction =
      bge::stoch_loss(p, d, wn_only, beta, 0.0).grad;
  Eigen::VectorXd repulsion = bge::stoch_loss(p, d, in_only, beta, 1.0).grad;
  Eigen::VectorXd closed =
      (static_cast<double>(m1) / static_cast<double>(d.positive_count())) *
          attraction +
      lambda * (static_cast<double>(m2) /
                static_cast<double>(d.all_pair_count())) *
          repulsion;
  double scale = std::max(1.0, closed.cwiseAbs().maxCoeff());
  EXPECT_LT((mean - closed).cwiseAbs().maxCoeff() / scale, 1e-10);
}

TEST(ExpectedStochGrad, FullBatchesAreASingleBatch) {
  bge::RngStream rng(47);
  bge::Dataset d = toy_graph(4, 2, rng, 2);
  ModelParams p({{EncoderKind::linear, 2, 0}}, 2);
  bge::RngStream init = rng.split(0);
  bge::random_init(p, init);
  std::int64_t m1 = d.positive_count(), m2 = d.all_pair_count();
  Eigen::VectorXd mean = bge::expected_stoch_grad(p, d, 0.5, 1.0, m1, m2);
  bge::PairBatch batch;
  batch.positive_pairs = d.positive_pairs();
  for (int i = 0; i < d.n(); ++i)
    for (int j = i + 1; j < d.n(); ++j) batch.contrast_pairs.push_back({i, j});
  Eigen::VectorXd single = bge::stoch_loss(p, d, batch, 0.5, 1.0).grad;
  EXPECT_LT((mean - single).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(ExpectedStochGrad, ZeroLambdaDropsRepulsion) {
  bge::RngStream rng(48);
  bge::Dataset d = toy_graph(4, 2, rng, 3);
  ModelParams p({{EncoderKind::linear, 2, 0}}, 2);
  bge::RngStream init = rng.split(0);
  bge::random_init(p, init);
  Eigen::VectorXd mean = bge::expected_stoch_grad(p, d, 0.4, 0.0, 2, 2);
  bge::PairBatch wn_only;
  wn_only.positive_pairs = d.positive_pairs();
  Eigen::VectorXd closed =
      (2.0 / static_cast<double>(d.positive_count())) *
      bge::stoch_loss(p, d, wn_only, 0.4, 0.0).grad;
  double scale = std::max(1.0, closed.cwiseAbs().maxCoeff());
  EXPECT_LT((mean - closed).cwiseAbs().maxCoeff() / scale, 1e-10);
}

TEST(ExpectedStochGrad, GuardsEnumerationSize) {
  bge::RngStream rng(49);
  bge::Dataset d = toy_graph(30, 2, rng, 25);
  ModelParams p({{EncoderKind::linear, 2, 0}}, 2);
  EXPECT_THROW(bge::expected_stoch_grad(p, d, 0.5, 1.0, 12, 200),
               bge::ValidationError);
}

TEST(EstimatingEquation, MatchedLambdaFactorsThroughFullGradient) {
  bge::RngStream rng(50);
  bge::Dataset d = toy_graph(6, 3, rng, 5);
  ModelParams p({{EncoderKind::mlp1, 3, 3}}, 2);
  bge::RngStream init = rng.split(0);
  bge::random_init(p, init);
  for (int k = p.psi_size(); k < p.size(); ++k) p.theta[k] = 0.2 * rng.normal();

  double beta = 0.6;
  std::int64_t m1 = 3, m2 = 5;
  double v = bge::contrast_ratio(d);
  double lambda = v * static_cast<double>(m1) / static_cast<double>(m2);
  Eigen::VectorXd lhs = bge::estimating_lhs(p, d, beta, lambda, m1, m2);
  Eigen::VectorXd scaled =
      v * static_cast<double>(m1) * bge::embs_loss(p, d, beta).grad;
  double scale = std::max(1.0, scaled.cwiseAbs().maxCoeff());
  EXPECT_LT((lhs - scaled).cwiseAbs().maxCoeff() / scale, 1e-10);
  EXPECT_NEAR(bge::estimating_residual(p, d, beta, lambda, m1, m2),
              scaled.norm(), 1e-9 * std::max(1.0, scaled.norm()));
}

TEST(EstimatingEquation, ZeroAtTheAnalyticOffsetRoot) {
  // Zero encoder: every pair has log mu = -gamma, and the root is solvable
  // in closed form.
  std::vector<Eigen::VectorXd> rows(5, Eigen::VectorXd::Ones(2));
  bge::Dataset d(rows);
  d.set_weight(0, 1, 2);
  d.set_weight(2, 3, 1);
  ModelParams p({{EncoderKind::linear, 2, 0}}, 2);
  double beta = 0.5, lambda = 2.0;
  std::int64_t m1 = 2, m2 = 4;
  double v = bge::contrast_ratio(d);
  double w_sum = 3.0;
  double gamma_star = -std::log(
      v * static_cast<double>(m1) * w_sum /
      (lambda * static_cast<double>(m2) * static_cast<double>(d.all_pair_count())));
  p.set_gamma(0, 0, gamma_star);
  EXPECT_LT(bge::estimating_residual(p, d, beta, lambda, m1, m2), 1e-9);
}

TEST(EstimatingEquation, BisectionOracleAgreesWithResidual) {
  bge::RngStream rng(51);
  bge::Dataset d = toy_graph(6, 3, rng, 5);
  ModelParams p({{EncoderKind::linear, 3, 0}}, 2);
  bge::RngStream init = rng.split(0);
  bge::random_init(p, init);
  double beta = 0.5, lambda = 3.0, m1 = 2, m2 = 6;
  double root = oracles::gamma_root_bisect(p, d, beta, lambda, m1, m2);
  ModelParams at_root = p;
  at_root.set_gamma(0, 0, root);
  Eigen::VectorXd lhs = bge::estimating_lhs(
      at_root, d, beta, lambda, static_cast<std::int64_t>(m1),
      static_cast<std::int64_t>(m2));
  // Only the offset coordinate is pinned by the scalar equation.
  EXPECT_LT(std::abs(lhs[p.gamma_index(0, 0)]), 1e-7);
}

TEST(EstimatingEquation, LambdaScalingShiftsTheOffsetRoot) {
  // Scaling lambda by k multiplies the fitted rate by 1/k; on the offset
  // restriction that is exactly a +log k move of the root.
  bge::RngStream rng(52);
  bge::Dataset d = toy_graph(6, 3, rng, 4);
  ModelParams p({{EncoderKind::linear, 3, 0}}, 2);
  bge::RngStream init = rng.split(0);
  bge::random_init(p, init);
  double beta = 0.5, m1 = 2, m2 = 6;
  double v = bge::contrast_ratio(d);
  double lambda_matched = v * m1 / m2;
  double base = oracles::gamma_root_bisect(p, d, beta, lambda_matched, m1, m2);
  for (double k : {0.5, 2.0}) {
    double shifted =
        oracles::gamma_root_bisect(p, d, beta, k * lambda_matched, m1, m2);
    ASSERT_NEAR(shifted - base, std::log(k), 1e-9);
  }
}

TEST(TrainSgd, ZeroLearningRateKeepsTheCenter) {
  bge::RngStream rng(53);
  bge::Dataset d = toy_graph(6, 3, rng, 4);
  ModelParams p({{EncoderKind::linear, 3, 0}}, 2);
  bge::RngStream init = rng.split(0);
  bge::random_init(p, init);
  bge::SGDConfig cfg;
  cfg.beta = 0.5;
  cfg.m1 = 2;
  cfg.m2 = 4;
  cfg.delta0 = 0.0;
  cfg.iters = 50;
  cfg.eval_every = 10;
  cfg.theta_center = p.theta;
  cfg.seed = 5;
  auto traj = bge::train_sgd(d, {{EncoderKind::linear, 3, 0}}, 2, cfg);
  EXPECT_TRUE(traj.final_theta == p.theta);
  EXPECT_EQ(traj.projection_hits, 0);
}

TEST(TrainSgd, DeterministicAcrossReruns) {
  bge::RngStream rng(54);
  bge::Dataset d = toy_graph(8, 3, rng, 6);
  bge::SGDConfig cfg;
  cfg.beta = 0.5;
  cfg.m1 = 3;
  cfg.m2 = 6;
  cfg.delta0 = 0.02;
  cfg.iters = 200;
  cfg.eval_every = 50;
  cfg.seed = 77;
  auto a = bge::train_sgd(d, {{EncoderKind::linear, 3, 0}}, 2, cfg);
  auto b = bge::train_sgd(d, {{EncoderKind::linear, 3, 0}}, 2, cfg);
  ASSERT_EQ(a.records.size(), b.records.size());
  EXPECT_TRUE(a.final_theta == b.final_theta);
  for (std::size_t k = 0; k < a.records.size(); ++k) {
    ASSERT_TRUE(a.records[k].theta == b.records[k].theta);
    ASSERT_EQ(a.records[k].stoch_value, b.records[k].stoch_value);
  }
}

TEST(TrainSgd, IteratesStayInTheBall) {
  bge::RngStream rng(55);
  bge::Dataset d = toy_graph(8, 3, rng, 6);
  bge::SGDConfig cfg;
  cfg.beta = 0.5;
  cfg.m1 = 3;
  cfg.m2 = 6;
  cfg.delta0 = 0.5;
  cfg.iters = 300;
  cfg.eval_every = 25;
  cfg.radius = 0.4;
  cfg.seed = 11;
  auto traj = bge::train_sgd(d, {{EncoderKind::linear, 3, 0}}, 2, cfg);
  Eigen::VectorXd center = Eigen::VectorXd::Zero(traj.final_theta.size());
  for (const auto& rec : traj.records)
    ASSERT_LE((rec.theta - center).norm(), cfg.radius + 1e-9);
  EXPECT_GT(traj.projection_hits, 0);
}

TEST(TrainSgd, OffsetOnlyRunApproachesTheBisectionRoot) {
  bge::RngStream rng(56);
  bge::Dataset d = toy_graph(8, 3, rng, 6);
  ModelParams frozen({{EncoderKind::linear, 3, 0}}, 2);
  bge::RngStream init = rng.split(0);
  bge::random_init(frozen, init);

  bge::SGDConfig cfg;
  cfg.beta = 0.5;
  cfg.m1 = 3;
  cfg.m2 = 6;
  cfg.delta0 = 0.05;
  cfg.alpha_exp = 0.6;
  cfg.iters = 3000;
  cfg.eval_every = 750;
  cfg.gamma_only = true;
  cfg.theta_center = frozen.theta;
  cfg.radius = 30.0;
  double lambda = bge::default_lambda(d, cfg.m1, cfg.m2);
  double root = oracles::gamma_root_bisect(
      frozen, d, cfg.beta, lambda, static_cast<double>(cfg.m1),
      static_cast<double>(cfg.m2));

  int close = 0;
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    cfg.seed = 100 + seed;
    auto traj = bge::train_sgd(d, {{EncoderKind::linear, 3, 0}}, 2, cfg);
    double gamma_T = traj.final_theta[frozen.gamma_index(0, 0)];
    if (std::abs(gamma_T - root) < 1e-2) ++close;
  }
  EXPECT_GE(close, 4);
}

TEST(TrainFullbatch, ImmediateReturnAtAStationaryPoint) {
  std::vector<Eigen::VectorXd> rows(4, Eigen::VectorXd::Ones(2));
  bge::Dataset d(rows);
  d.set_weight(0, 1, 1);
  d.set_weight(2, 3, 1);
  // Zero encoder: the offset root is analytic (mu = sum w / |I|).
  ModelParams p({{EncoderKind::linear, 2, 0}}, 2);
  double mu_star = 2.0 / static_cast<double>(d.all_pair_count());
  p.set_gamma(0, 0, -std::log(mu_star));
  bge::FullBatchConfig cfg;
  cfg.beta = 0.5;
  cfg.ridge = 0.0;
  cfg.gamma_only = true;
  cfg.tol = 1e-8;
  std::vector<double> trace;
  auto out = bge::train_fullbatch(d, {{EncoderKind::linear, 2, 0}}, 2, cfg, &p,
                                  nullptr, &trace);
  EXPECT_EQ(trace.size(), 1u);
  EXPECT_TRUE(out.theta == p.theta);
}

TEST(TrainFullbatch, OffsetOnlyConvergesToTheBisectionRoot) {
  bge::RngStream rng(57);
  bge::Dataset d = toy_graph(7, 3, rng, 5);
  ModelParams frozen({{EncoderKind::linear, 3, 0}}, 2);
  bge::RngStream init = rng.split(0);
  bge::random_init(frozen, init);
  bge::FullBatchConfig cfg;
  cfg.beta = 0.5;
  cfg.ridge = 0.0;
  cfg.gamma_only = true;
  cfg.tol = 1e-9;
  cfg.max_iters = 4000;
  auto out = bge::train_fullbatch(d, {{EncoderKind::linear, 3, 0}}, 2, cfg,
                                  &frozen);
  double v = bge::contrast_ratio(d);
  // Matched batch scales: the stationary point of the full loss equals the
  // estimating-equation root.
  double root = oracles::gamma_root_bisect(frozen, d, cfg.beta, v, 1.0, 1.0);
  EXPECT_NEAR(out.theta[frozen.gamma_index(0, 0)], root, 1e-6);
}

TEST(TrainFullbatch, LossTraceIsNonIncreasing) {
  bge::RngStream rng(58);
  bge::Dataset d = toy_graph(8, 3, rng, 7);
  ModelParams start({{EncoderKind::mlp1, 3, 3}}, 2);
  bge::RngStream init = rng.split(0);
  bge::random_init(start, init);
  bge::FullBatchConfig cfg;
  cfg.beta = 1.0;
  cfg.ridge = 1e-4;
  cfg.max_iters = 80;
  cfg.tol = 1e-10;
  std::vector<double> trace;
  bge::train_fullbatch(d, {{EncoderKind::mlp1, 3, 3}}, 2, cfg, &start, nullptr,
                       &trace);
  ASSERT_GT(trace.size(), 2u);
  for (std::size_t k = 1; k < trace.size(); ++k)
    ASSERT_LE(trace[k], trace[k - 1] + 1e-12);
}

TEST(TrainFullbatch, BetaZeroTrainsTheLikelihoodLoss) {
  bge::RngStream rng(59);
  bge::Dataset d = toy_graph(6, 3, rng, 4);
  ModelParams start({{EncoderKind::linear, 3, 0}}, 2);
  bge::RngStream init = rng.split(0);
  bge::random_init(start, init);
  bge::FullBatchConfig cfg;
  cfg.beta = 0.0;
  cfg.ridge = 0.0;
  cfg.max_iters = 60;
  cfg.tol = 1e-10;
  std::vector<double> trace;
  auto out = bge::train_fullbatch(d, {{EncoderKind::linear, 3, 0}}, 2, cfg,
                                  &start, nullptr, &trace);
  EXPECT_NEAR(trace.front(), bge::nll_loss(start, d).value, 1e-10);
  EXPECT_NEAR(trace.back(), bge::nll_loss(out, d).value, 1e-10);
  EXPECT_LT(trace.back(), trace.front());
}

TEST(Config, ValidationCatchesBadFields) {
  bge::SGDConfig cfg;
  cfg.beta = 0.0;
  EXPECT_THROW(cfg.validate(), bge::ValidationError);
  cfg.beta = 0.5;
  cfg.alpha_exp = 1.5;
  EXPECT_THROW(cfg.validate(), bge::ValidationError);
  cfg.alpha_exp = 0.6;
  cfg.radius = 0.0;
  EXPECT_THROW(cfg.validate(), bge::ValidationError);
  cfg.radius = 1.0;
  EXPECT_NO_THROW(cfg.validate());

  bge::FullBatchConfig fb;
  fb.beta = -0.1;
  EXPECT_THROW(fb.validate(), bge::ValidationError);
}

TEST(DefaultLambda, MatchesTheContrastRatioScale) {
  bge::RngStream rng(60);
  bge::Dataset d = toy_graph(6, 2, rng, 3);
  double v = bge::contrast_ratio(d);
  EXPECT_DOUBLE_EQ(bge::default_lambda(d, 4, 8), v * 4.0 / 8.0);
  EXPECT_DOUBLE_EQ(bge::default_lambda(d, 4, 0), 1.0);
}

}  // namespace
