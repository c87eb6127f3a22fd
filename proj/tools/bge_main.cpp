// bge: command-line front end for the header-only library. Subcommands cover
// synthetic benchmark generation, training, clustering evaluation, the full
// robustness experiment grid, finite-difference gradient audits, and the
// decomposition/unbiasedness diagnostics.
//
// Exit codes: 0 success, 2 validation or parse failure, 3 numeric failure
// (including failed gradient/diagnostic checks), 4 I/O failure, 5 experiment
// grid finished with failed cells.

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "bge/bge.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitValidation = 2;
constexpr int kExitNumeric = 3;
constexpr int kExitIo = 4;
constexpr int kExitCellFailure = 5;

std::vector<double> parse_double_list(const std::string& text,
                                      const std::string& flag) {
  std::vector<double> out;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    std::size_t comma = text.find(',', pos);
    if (comma == std::string::npos) comma = text.size();
    std::size_t a = pos, b = comma;
    while (a < b && std::isspace(static_cast<unsigned char>(text[a]))) ++a;
    while (b > a && std::isspace(static_cast<unsigned char>(text[b - 1]))) --b;
    if (a == b)
      throw bge::ValidationError(flag + ": empty entry in list '" + text + "'");
    double v = 0.0;
    auto res = std::from_chars(text.data() + a, text.data() + b, v);
    if (res.ec != std::errc{} || res.ptr != text.data() + b)
      throw bge::ValidationError(flag + ": cannot parse '" +
                                 text.substr(a, b - a) + "' as a number");
    out.push_back(v);
    pos = comma + 1;
  }
  return out;
}

std::vector<int> load_labels(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw bge::IoError("cannot open labels: " + path.string());
  std::vector<int> labels;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::size_t a = line.find_first_not_of(" \t\r");
    if (a == std::string::npos || line[a] == '#') continue;
    std::size_t b = line.find_last_not_of(" \t\r") + 1;
    int v = 0;
    auto res = std::from_chars(line.data() + a, line.data() + b, v);
    if (res.ec != std::errc{} || res.ptr != line.data() + b)
      throw bge::ParseError("labels: bad integer '" + line.substr(a, b - a) +
                                "'",
                            line_no);
    if (v < 0)
      throw bge::ValidationError("labels: negative label at line " +
                                 std::to_string(line_no));
    labels.push_back(v);
  }
  return labels;
}

void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw bge::IoError("cannot create directory " + dir.string() + ": " +
                             ec.message());
}

std::ofstream open_out(const fs::path& path) {
  std::ofstream out(path);
  if (!out) throw bge::IoError("cannot write " + path.string());
  return out;
}

void write_json_file(const fs::path& path, const json& doc) {
  auto out = open_out(path);
  out << doc.dump(2) << '\n';
  if (!out) throw bge::IoError("write failed: " + path.string());
}

std::string fmt(double v) { return bge::detail::format_double(v); }

struct Moments {
  double mean = 0.0;
  double sd = 0.0;
  double se = 0.0;
};

Moments moments(const std::vector<double>& xs) {
  Moments m;
  if (xs.empty()) return m;
  double total = 0.0;
  for (double x : xs) total += x;
  m.mean = total / static_cast<double>(xs.size());
  if (xs.size() > 1) {
    double ss = 0.0;
    for (double x : xs) ss += (x - m.mean) * (x - m.mean);
    m.sd = std::sqrt(ss / static_cast<double>(xs.size() - 1));
    m.se = m.sd / std::sqrt(static_cast<double>(xs.size()));
  }
  return m;
}

// ---------------------------------------------------------------- generate

struct GenerateArgs {
  bge::SyntheticConfig syn;
  std::string out = "out";
};

int cmd_generate(const GenerateArgs& a) {
  a.syn.validate();
  auto res = bge::generate(a.syn);
  fs::path dir(a.out);
  ensure_dir(dir);
  bge::save_dataset(res.data, dir / "features.tsv", dir / "edges.tsv");
  {
    auto out = open_out(dir / "labels.tsv");
    for (int v : res.labels) out << v << '\n';
  }
  json manifest;
  manifest["command"] = "generate";
  manifest["config"] = {{"n", a.syn.n},
                        {"p", a.syn.p},
                        {"latent", a.syn.latent_dim},
                        {"clusters", a.syn.clusters},
                        {"within", a.syn.within_prob},
                        {"xi", a.syn.xi},
                        {"target_mean_norm", a.syn.target_mean_norm},
                        {"seed", a.syn.seed}};
  manifest["outputs"] = {{"features", "features.tsv"},
                         {"edges", "edges.tsv"},
                         {"labels", "labels.tsv"}};
  manifest["stats"] = {{"nodes", res.data.n()},
                       {"positive_pairs", res.data.positive_count()},
                       {"all_pairs", res.data.all_pair_count()}};
  write_json_file(dir / "manifest.json", manifest);
  std::cout << "generate: wrote " << res.data.n() << " nodes, "
            << res.data.positive_count() << " edges to " << dir.string()
            << '\n';
  return kExitOk;
}

// ------------------------------------------------------------------- train

struct TrainArgs {
  std::string features;
  std::string edges;
  std::string out = "out";
  std::string encoder = "linear";
  std::string optimizer = "sgd";
  std::string init;
  double beta = 0.5;
  double lambda = 0.0;  // 0 = v m1 / m2
  std::int64_t m1 = 32;
  std::int64_t m2 = 64;
  double delta0 = 0.01;
  double alpha = 0.6;
  std::int64_t iters = 2000;
  double radius = 10.0;
  double ridge = 1e-4;
  double tol = 1e-5;
  int hidden = 16;
  int dim = 2;
  std::int64_t eval_every = 100;
  bool gamma_only = false;
  std::uint64_t seed = 1;
};

// Residual of the estimating equation at the canonical batch sizes
// m1 = |W_n|, m2 = |I_n|, lambda = 1, reported per pair set (divided by
// v m1 = |I_n|) so it is directly comparable with the full-loss gradient
// norm, plus the raw value.
struct ResidualPair {
  double normalized = 0.0;
  double raw = 0.0;
};

ResidualPair residual_at(const bge::ModelParams& p, const bge::Dataset& d,
                         double beta) {
  ResidualPair r;
  r.raw = bge::estimating_residual(p, d, beta, 1.0, d.positive_count(),
                                   d.all_pair_count());
  r.normalized = r.raw / static_cast<double>(d.all_pair_count());
  return r;
}

int cmd_train(const TrainArgs& a) {
  auto loaded = bge::load_dataset(a.features, a.edges);
  const bge::Dataset& d = loaded.data;
  bge::EncoderKind kind = bge::encoder_kind_from_string(a.encoder);
  bge::EncoderSpec spec{kind, d.dim_of_view(0),
                        kind == bge::EncoderKind::mlp1 ? a.hidden : 0};
  std::vector<bge::EncoderSpec> specs{spec};

  // theta = 0 is a stationary point of every loss here (all embeddings
  // collapse, so encoder gradients vanish), so an explicit start is always
  // provided: the checkpoint if given, otherwise a seeded random draw.
  bge::ModelParams init(specs, a.dim);
  if (!a.init.empty()) {
    bge::ModelParams from_file = bge::load_checkpoint(a.init);
    if (from_file.theta.size() != init.theta.size())
      throw bge::ValidationError(
          "train: init checkpoint has " +
          std::to_string(from_file.theta.size()) +
          " parameters, the configured model has " +
          std::to_string(init.theta.size()));
    init.theta = from_file.theta;
  } else {
    bge::RngStream init_rng(bge::derive_seed(a.seed, 11));
    bge::random_init(init, init_rng);
  }

  fs::path dir(a.out);
  ensure_dir(dir);

  json metrics;
  metrics["optimizer"] = a.optimizer;
  metrics["beta"] = a.beta;
  metrics["loss_kind"] = a.beta == 0.0 ? "nll" : "embs";
  metrics["n"] = d.n();
  metrics["pairs"] = d.all_pair_count();
  metrics["positives"] = d.positive_count();
  metrics["seed"] = a.seed;
  metrics["encoder"] = a.encoder;
  metrics["dim"] = a.dim;

  bge::ModelParams final_params(specs, a.dim);
  if (a.optimizer == "sgd") {
    bge::SGDConfig cfg;
    cfg.beta = a.beta;
    if (a.lambda < 0.0)
      throw bge::ValidationError("train: lambda must be >= 0 (0 = automatic)");
    if (a.lambda > 0.0) cfg.lambda = a.lambda;
    cfg.m1 = a.m1;
    cfg.m2 = a.m2;
    cfg.delta0 = a.delta0;
    cfg.alpha_exp = a.alpha;
    cfg.iters = a.iters;
    cfg.radius = a.radius;
    cfg.seed = a.seed;
    cfg.eval_every = a.eval_every;
    cfg.gamma_only = a.gamma_only;
    cfg.record_full_loss = true;
    cfg.theta_center = init.theta;
    auto traj = bge::train_sgd(d, specs, a.dim, cfg);
    final_params.theta = traj.final_theta;

    auto out = open_out(dir / "trajectory.jsonl");
    for (const auto& rec : traj.records) {
      json line;
      line["t"] = rec.t;
      line["loss"] = rec.stoch_value;
      if (rec.full_loss) line["full_embs"] = *rec.full_loss;
      line["theta_norm"] = rec.theta.norm();
      line["proj_hits"] = rec.proj_hits;
      out << line.dump() << '\n';
    }
    metrics["iterations"] = cfg.iters;
    metrics["records"] = traj.records.size();
    metrics["projection_hits"] = traj.projection_hits;
    metrics["clamp_events"] = traj.clamp_events;
    metrics["lambda"] =
        cfg.lambda ? *cfg.lambda : bge::default_lambda(d, cfg.m1, cfg.m2);
    metrics["m1"] = cfg.m1;
    metrics["m2"] = cfg.m2;
    metrics["loss_final"] = bge::embs_loss(final_params, d, a.beta).value;
  } else {
    bge::FullBatchConfig cfg;
    cfg.beta = a.beta;
    cfg.ridge = a.ridge;
    cfg.max_iters = a.iters;
    cfg.tol = a.tol;
    cfg.gamma_only = a.gamma_only;
    std::vector<double> trace;
    final_params = bge::train_fullbatch(d, specs, a.dim, cfg, &init, nullptr,
                                        &trace);
    auto out = open_out(dir / "trajectory.jsonl");
    for (std::size_t i = 0; i < trace.size(); ++i) {
      json line;
      line["t"] = i;
      line["loss"] = trace[i];
      out << line.dump() << '\n';
    }
    bge::LossReport rep = a.beta == 0.0
                              ? bge::nll_loss(final_params, d)
                              : bge::embs_loss(final_params, d, a.beta);
    metrics["loss_final"] = rep.value;
    if (cfg.ridge > 0.0) {
      auto psi = final_params.theta.head(final_params.psi_size());
      rep.grad.head(final_params.psi_size()) += 2.0 * cfg.ridge * psi;
    }
    if (cfg.gamma_only) rep.grad.head(final_params.psi_size()).setZero();
    metrics["iterations"] = trace.size() - 1;
    metrics["grad_norm"] = rep.grad.norm();
    metrics["converged"] = rep.grad.norm() <= cfg.tol;
    metrics["ridge"] = cfg.ridge;
    metrics["clamp_events"] = rep.clamp_events;
  }

  ResidualPair res = residual_at(final_params, d, a.beta);
  metrics["estimating_residual"] = res.normalized;
  metrics["estimating_residual_raw"] = res.raw;
  metrics["theta_norm"] = final_params.theta.norm();
  if (loaded.stats.self_loops_dropped || loaded.stats.duplicate_edges_merged)
    metrics["load_stats"] = {
        {"self_loops_dropped", loaded.stats.self_loops_dropped},
        {"duplicate_edges_merged", loaded.stats.duplicate_edges_merged}};

  bge::save_checkpoint(final_params, dir / "checkpoint.json");
  write_json_file(dir / "metrics.json", metrics);
  std::cout << "train: " << a.optimizer << " beta=" << a.beta
            << " loss_final=" << metrics["loss_final"].get<double>()
            << " residual=" << res.normalized << '\n';
  return kExitOk;
}

// -------------------------------------------------------------------- eval

struct EvalArgs {
  std::string checkpoint;
  std::string features;
  std::string labels;
  std::string out = "out";
  int k = 4;
  int restarts = 10;
  std::uint64_t seed = 1;
};

int cmd_eval(const EvalArgs& a) {
  bge::ModelParams p = bge::load_checkpoint(a.checkpoint);
  bge::Dataset d(bge::load_features(a.features));
  if (p.num_views() != 1)
    throw bge::ValidationError("eval: checkpoint expects " +
                               std::to_string(p.num_views()) +
                               " views, feature file provides one");
  if (p.spec(0).in_dim != d.dim_of_view(0))
    throw bge::ValidationError(
        "eval: checkpoint input dimension " + std::to_string(p.spec(0).in_dim) +
        " != feature dimension " + std::to_string(d.dim_of_view(0)));
  std::vector<int> labels = load_labels(a.labels);
  if (static_cast<int>(labels.size()) != d.n())
    throw bge::ValidationError("eval: " + std::to_string(labels.size()) +
                               " labels for " + std::to_string(d.n()) +
                               " nodes");

  auto r = bge::evaluate_embedding(p, d, a.k, labels, a.seed, a.restarts);
  fs::path dir(a.out);
  ensure_dir(dir);
  {
    Eigen::MatrixXd y = bge::embed_all(p, d);
    auto out = open_out(dir / "embeddings.tsv");
    for (Eigen::Index i = 0; i < y.rows(); ++i) {
      for (Eigen::Index k = 0; k < y.cols(); ++k) {
        if (k) out << '\t';
        out << fmt(y(i, k));
      }
      out << '\n';
    }
  }
  {
    auto out = open_out(dir / "assignments.tsv");
    for (int c : r.assignments) out << c << '\n';
  }
  json metrics = {{"purity", r.purity},       {"nmi", r.nmi},
                  {"inertia", r.kmeans_inertia}, {"k", a.k},
                  {"seed", a.seed},           {"restarts", r.restarts_used},
                  {"n", d.n()}};
  write_json_file(dir / "metrics.json", metrics);
  std::cout << "eval: purity=" << r.purity << " nmi=" << r.nmi << '\n';
  return kExitOk;
}

// -------------------------------------------------------------- experiment

struct ExperimentArgs {
  std::string xi_list = "0.01,0.02,0.03";
  std::string beta_list = "0,0.1,0.5,1";
  std::string out = "out";
  int repeats = 10;
  int n = 200;
  int p = 20;
  int latent = 5;
  int clusters = 4;
  double within = 0.05;
  double target_mean_norm = 4.0;
  int dim = 2;
  double ridge = 3.0;
  std::int64_t iters = 800;
  double tol = 1e-5;
  int restarts = 10;
  std::uint64_t seed = 1;
};

struct CellRun {
  double xi = 0.0;
  double beta = 0.0;
  int run = 0;
  std::uint64_t seed = 0;
  bool ok = false;
  double purity = 0.0;
  double nmi = 0.0;
  double loss_final = 0.0;
  double residual = 0.0;
  std::string error;
};

int cmd_experiment(const ExperimentArgs& a) {
  std::vector<double> xis = parse_double_list(a.xi_list, "--xi");
  std::vector<double> betas = parse_double_list(a.beta_list, "--betas");
  std::sort(xis.begin(), xis.end());
  std::sort(betas.begin(), betas.end());
  if (std::adjacent_find(xis.begin(), xis.end()) != xis.end())
    throw bge::ValidationError("--xi: duplicate entries");
  if (std::adjacent_find(betas.begin(), betas.end()) != betas.end())
    throw bge::ValidationError("--betas: duplicate entries");
  for (double x : xis)
    if (x < 0.0 || x > 1.0)
      throw bge::ValidationError("--xi: entries must lie in [0, 1]");
  for (double b : betas)
    if (b < 0.0) throw bge::ValidationError("--betas: entries must be >= 0");
  if (a.repeats < 2)
    throw bge::ValidationError("--repeats must be >= 2");

  fs::path dir(a.out);
  ensure_dir(dir);

  std::vector<CellRun> rows;
  // One dataset per (xi, run), shared across beta so the comparison between
  // losses is paired; every fit still gets its own init and k-means seed.
  for (std::size_t xi_idx = 0; xi_idx < xis.size(); ++xi_idx) {
    std::vector<bge::SyntheticResult> data;
    data.reserve(static_cast<std::size_t>(a.repeats));
    for (int run = 0; run < a.repeats; ++run) {
      bge::SyntheticConfig syn;
      syn.n = a.n;
      syn.p = a.p;
      syn.latent_dim = a.latent;
      syn.clusters = a.clusters;
      syn.within_prob = a.within;
      syn.xi = xis[xi_idx];
      syn.target_mean_norm = a.target_mean_norm;
      syn.seed = bge::derive_seed(a.seed, 101, xi_idx,
                                  static_cast<std::uint64_t>(run));
      data.push_back(bge::generate(syn));
    }
    for (std::size_t beta_idx = 0; beta_idx < betas.size(); ++beta_idx) {
      for (int run = 0; run < a.repeats; ++run) {
        CellRun row;
        row.xi = xis[xi_idx];
        row.beta = betas[beta_idx];
        row.run = run;
        row.seed = bge::derive_seed(a.seed, xi_idx, beta_idx,
                                    static_cast<std::uint64_t>(run));
        const auto& inst = data[static_cast<std::size_t>(run)];
        try {
          std::vector<bge::EncoderSpec> specs{
              {bge::EncoderKind::linear, a.p, 0}};
          bge::ModelParams init(specs, a.dim);
          bge::RngStream init_rng(bge::derive_seed(row.seed, 2));
          bge::random_init(init, init_rng);
          bge::FullBatchConfig cfg;
          cfg.beta = row.beta;
          cfg.ridge = a.ridge;
          cfg.max_iters = a.iters;
          cfg.tol = a.tol;
          auto params =
              bge::train_fullbatch(inst.data, specs, a.dim, cfg, &init);
          auto ev = bge::evaluate_embedding(params, inst.data, a.clusters,
                                            inst.labels,
                                            bge::derive_seed(row.seed, 3),
                                            a.restarts);
          row.purity = ev.purity;
          row.nmi = ev.nmi;
          row.loss_final =
              row.beta == 0.0
                  ? bge::nll_loss(params, inst.data).value
                  : bge::embs_loss(params, inst.data, row.beta).value;
          row.residual = residual_at(params, inst.data, row.beta).normalized;
          row.ok = true;
        } catch (const std::exception& e) {
          row.error = e.what();
        }
        std::cerr << "cell xi=" << row.xi << " beta=" << row.beta << " run "
                  << row.run << ": "
                  << (row.ok ? "purity " + fmt(row.purity) : "FAILED")
                  << '\n';
        rows.push_back(std::move(row));
      }
    }
  }

  {
    auto out = open_out(dir / "results.csv");
    out << "xi,beta,run,seed,purity,nmi,loss_final,residual\n";
    for (const auto& r : rows) {
      out << fmt(r.xi) << ',' << fmt(r.beta) << ',' << r.run << ',' << r.seed
          << ',';
      if (r.ok)
        out << fmt(r.purity) << ',' << fmt(r.nmi) << ',' << fmt(r.loss_final)
            << ',' << fmt(r.residual) << '\n';
      else
        out << "NA,NA,NA,NA\n";
    }
  }

  json summary;
  summary["base_seed"] = a.seed;
  summary["config"] = {{"xi", xis},
                       {"betas", betas},
                       {"repeats", a.repeats},
                       {"n", a.n},
                       {"p", a.p},
                       {"latent", a.latent},
                       {"clusters", a.clusters},
                       {"within", a.within},
                       {"target_mean_norm", a.target_mean_norm},
                       {"dim", a.dim},
                       {"ridge", a.ridge},
                       {"iters", a.iters},
                       {"tol", a.tol},
                       {"restarts", a.restarts}};
  summary["cells"] = json::array();
  summary["failures"] = json::array();
  std::size_t failures = 0;

  auto csv = open_out(dir / "summary.csv");
  csv << "xi,beta,runs,failures,mean_purity,se_purity,sd_purity,mean_nmi,"
         "se_nmi,sd_nmi\n";
  for (double xi : xis) {
    for (double beta : betas) {
      std::vector<double> ps, ns;
      int failed = 0;
      for (const auto& r : rows) {
        if (r.xi != xi || r.beta != beta) continue;
        if (r.ok) {
          ps.push_back(r.purity);
          ns.push_back(r.nmi);
        } else {
          ++failed;
          summary["failures"].push_back(
              {{"xi", xi}, {"beta", beta}, {"run", r.run}, {"error", r.error}});
        }
      }
      failures += static_cast<std::size_t>(failed);
      Moments mp = moments(ps), mn = moments(ns);
      csv << fmt(xi) << ',' << fmt(beta) << ',' << ps.size() << ',' << failed
          << ',' << fmt(mp.mean) << ',' << fmt(mp.se) << ',' << fmt(mp.sd)
          << ',' << fmt(mn.mean) << ',' << fmt(mn.se) << ',' << fmt(mn.sd)
          << '\n';
      summary["cells"].push_back({{"xi", xi},
                                  {"beta", beta},
                                  {"runs", ps.size()},
                                  {"failures", failed},
                                  {"purity",
                                   {{"mean", mp.mean},
                                    {"se", mp.se},
                                    {"sd", mp.sd}}},
                                  {"nmi",
                                   {{"mean", mn.mean},
                                    {"se", mn.se},
                                    {"sd", mn.sd}}}});
    }
  }
  csv.close();
  write_json_file(dir / "summary.json", summary);

  // Plain-text grid: one row per beta, one column per xi, mean +- standard
  // error of purity. Standard deviations live in summary.csv.
  std::string table;
  {
    char buf[64];
    table += "purity, mean +- standard error over " +
             std::to_string(a.repeats) + " runs\n\n";
    std::snprintf(buf, sizeof(buf), "%-10s", "beta");
    table += buf;
    for (double xi : xis) {
      std::snprintf(buf, sizeof(buf), "  %-16s", ("xi=" + fmt(xi)).c_str());
      table += buf;
    }
    table += '\n';
    for (double beta : betas) {
      std::snprintf(buf, sizeof(buf), "%-10s", fmt(beta).c_str());
      table += buf;
      for (double xi : xis) {
        for (const auto& cell : summary["cells"]) {
          if (cell["xi"].get<double>() != xi ||
              cell["beta"].get<double>() != beta)
            continue;
          int failed = cell["failures"].get<int>();
          if (cell["runs"].get<std::size_t>() == 0) {
            std::snprintf(buf, sizeof(buf), "  %-16s", "FAILED");
          } else {
            double m = cell["purity"]["mean"].get<double>();
            double se = cell["purity"]["se"].get<double>();
            std::string mark = failed > 0 ? "*" : "";
            char inner[48];
            std::snprintf(inner, sizeof(inner), "%.3f +- %.3f%s", m, se,
                          mark.c_str());
            std::snprintf(buf, sizeof(buf), "  %-16s", inner);
          }
          table += buf;
        }
      }
      table += '\n';
    }
    if (failures > 0)
      table += "\n* cell had failed runs; see summary.json\n";
  }
  {
    auto out = open_out(dir / "table.txt");
    out << table;
  }
  std::cout << table;
  return failures == 0 ? kExitOk : kExitCellFailure;
}

// --------------------------------------------------------------- gradcheck

struct GradcheckArgs {
  std::uint64_t seed = 1;
  int draws = 20;
  double tol = 1e-5;
  int limit_draws = 10;
  std::string limit_betas;
  std::string out;
  bool inject_sign_flip = false;
};

struct ToyInstance {
  bge::Dataset data;
  bge::ModelParams params;
};

ToyInstance make_toy(bge::EncoderKind kind, bge::RngStream& rng) {
  int n = 4 + static_cast<int>(rng.uniform_index(4));
  int p = 2 + static_cast<int>(rng.uniform_index(3));
  int dim = 1 + static_cast<int>(rng.uniform_index(3));
  int hidden = 2 + static_cast<int>(rng.uniform_index(3));
  std::vector<Eigen::VectorXd> feats(static_cast<std::size_t>(n));
  for (auto& x : feats) {
    x.resize(p);
    for (int k = 0; k < p; ++k) x[k] = 0.7 * rng.normal();
  }
  bge::Dataset d(std::move(feats));
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j) {
      double u = rng.uniform();
      if (u < 0.25)
        d.set_weight(i, j, 1);
      else if (u < 0.33)
        d.set_weight(i, j, 2);
    }
  if (d.positive_count() == 0) d.set_weight(0, 1, 1);
  bge::ModelParams m({{kind, p, hidden}}, dim);
  bge::random_init(m, rng);
  m.theta *= 0.7;
  m.set_gamma(0, 0, rng.uniform(-0.5, 1.0));
  return {std::move(d), std::move(m)};
}

// Central finite differences of a scalar function of theta.
template <typename Fn>
Eigen::VectorXd fd_grad(bge::ModelParams& p, Fn&& value, double h = 1e-5) {
  Eigen::VectorXd g(p.size());
  for (int k = 0; k < p.size(); ++k) {
    double saved = p.theta[k];
    p.theta[k] = saved + h;
    double hi = value(p);
    p.theta[k] = saved - h;
    double lo = value(p);
    p.theta[k] = saved;
    g[k] = (hi - lo) / (2.0 * h);
  }
  return g;
}

double max_rel_err(const Eigen::VectorXd& got, const Eigen::VectorXd& want) {
  double worst = 0.0;
  for (Eigen::Index k = 0; k < got.size(); ++k) {
    double denom = std::max({1.0, std::abs(got[k]), std::abs(want[k])});
    worst = std::max(worst, std::abs(got[k] - want[k]) / denom);
  }
  return worst;
}

int cmd_gradcheck(const GradcheckArgs& a) {
  if (a.draws < 1) throw bge::ValidationError("--draws must be >= 1");
  if (!(a.tol > 0.0)) throw bge::ValidationError("--tol must be > 0");
  const double betas[] = {0.3, 0.5, 1.0};
  const char* losses[] = {"embs", "nll", "stoch"};
  const bge::EncoderKind kinds[] = {bge::EncoderKind::linear,
                                    bge::EncoderKind::mlp1};

  json checks = json::array();
  double overall = 0.0;
  for (std::size_t li = 0; li < 3; ++li) {
    for (std::size_t ki = 0; ki < 2; ++ki) {
      double worst = 0.0;
      for (int draw = 0; draw < a.draws; ++draw) {
        bge::RngStream rng(
            bge::derive_seed(a.seed, 31, li * 2 + ki,
                             static_cast<std::uint64_t>(draw)));
        ToyInstance toy = make_toy(kinds[ki], rng);
        double beta = betas[draw % 3];
        Eigen::VectorXd analytic;
        Eigen::VectorXd numeric;
        if (li == 0) {
          analytic = bge::embs_loss(toy.params, toy.data, beta).grad;
          numeric = fd_grad(toy.params, [&](bge::ModelParams& m) {
            return bge::embs_loss(m, toy.data, beta).value;
          });
        } else if (li == 1) {
          analytic = bge::nll_loss(toy.params, toy.data).grad;
          numeric = fd_grad(toy.params, [&](bge::ModelParams& m) {
            return bge::nll_loss(m, toy.data).value;
          });
        } else {
          std::int64_t m1 = std::min<std::int64_t>(2, toy.data.positive_count());
          std::int64_t m2 = std::min<std::int64_t>(4, toy.data.all_pair_count());
          bge::PairBatch batch = bge::sample_batch(toy.data, m1, m2, rng);
          double lambda = bge::default_lambda(toy.data, m1, m2);
          analytic =
              bge::stoch_loss(toy.params, toy.data, batch, beta, lambda).grad;
          numeric = fd_grad(toy.params, [&](bge::ModelParams& m) {
            return bge::stoch_loss(m, toy.data, batch, beta, lambda).value;
          });
        }
        if (a.inject_sign_flip) analytic = -analytic;
        worst = std::max(worst, max_rel_err(analytic, numeric));
      }
      overall = std::max(overall, worst);
      checks.push_back({{"loss", losses[li]},
                        {"encoder", bge::to_string(kinds[ki])},
                        {"draws", a.draws},
                        {"max_rel_err", worst}});
      std::cout << "gradcheck " << losses[li] << '/'
                << bge::to_string(kinds[ki]) << ": max rel err " << worst
                << " over " << a.draws << " draws\n";
    }
  }
  bool pass = overall < a.tol;

  json limits = json::array();
  if (!a.limit_betas.empty()) {
    for (double beta : parse_double_list(a.limit_betas, "--limit-betas")) {
      if (!(beta > 0.0))
        throw bge::ValidationError("--limit-betas: entries must be > 0");
      double worst_gap = 0.0, worst_bound = 0.0;
      bool limit_ok = true;
      for (int draw = 0; draw < a.limit_draws; ++draw) {
        bge::RngStream rng(
            bge::derive_seed(a.seed, 37, static_cast<std::uint64_t>(draw)));
        ToyInstance toy =
            make_toy(draw % 2 == 0 ? bge::EncoderKind::linear
                                   : bge::EncoderKind::mlp1,
                     rng);
        double nll = bge::nll_loss(toy.params, toy.data).value;
        double embs = bge::embs_loss(toy.params, toy.data, beta).value;
        double gap = std::abs(embs - nll);
        double bound = 1e-4 * (1.0 + std::abs(nll));
        if (gap > worst_gap) {
          worst_gap = gap;
          worst_bound = bound;
        }
        if (gap > bound) limit_ok = false;
      }
      limits.push_back({{"beta", beta},
                        {"draws", a.limit_draws},
                        {"max_gap", worst_gap},
                        {"bound_at_max", worst_bound},
                        {"pass", limit_ok}});
      std::cout << "gradcheck limit beta=" << beta << ": max |embs - nll| "
                << worst_gap << (limit_ok ? " (ok)" : " (FAIL)") << '\n';
      pass = pass && limit_ok;
    }
  }

  std::cout << "gradcheck: " << (pass ? "PASS" : "FAIL") << " (max rel err "
            << overall << ", tol " << a.tol << ")\n";
  if (!a.out.empty()) {
    fs::path dir(a.out);
    ensure_dir(dir);
    json report = {{"max_rel_err", overall},
                   {"tol", a.tol},
                   {"checks", checks},
                   {"limit_checks", limits},
                   {"seed", a.seed},
                   {"pass", pass}};
    write_json_file(dir / "report.json", report);
  }
  return pass ? kExitOk : kExitNumeric;
}

// ---------------------------------------------------------------- theorems

struct TheoremsArgs {
  std::uint64_t seed = 1;
  int scenarios = 100;
  std::string out;
};

bge::NoiseScenario sample_scenario(bge::RngStream& rng, bool in_region,
                                   Eigen::VectorXd* mu_theta_out) {
  bge::NoiseScenario s;
  int len = 4 + static_cast<int>(rng.uniform_index(8));
  s.nu.resize(len);
  s.mu_star.resize(len);
  s.eta_star.resize(len);
  Eigen::VectorXd mu_theta(len);
  double total = 0.0;
  for (int k = 0; k < len; ++k) {
    s.nu[k] = 0.1 + rng.uniform();
    total += s.nu[k];
  }
  s.nu /= total;
  s.nu[len - 1] += 1.0 - s.nu.sum();
  for (int k = 0; k < len; ++k) {
    s.mu_star[k] = 2.5 * rng.uniform();
    s.eta_star[k] = 1.5 * rng.uniform();
    mu_theta[k] = 0.1 + 3.0 * rng.uniform();
  }
  s.beta0 = 0.3 + 1.7 * rng.uniform();
  s.beta = s.beta0 * (0.1 + 0.9 * rng.uniform());
  double lyapunov = 0.0;
  for (int k = 0; k < len; ++k)
    lyapunov += s.nu[k] * s.eta_star[k] * std::pow(mu_theta[k], s.beta0);
  if (in_region)
    s.epsilon = lyapunov / (0.05 + 0.9 * rng.uniform()) + 1e-9;
  else
    s.epsilon = 0.1 + 2.5 * rng.uniform();
  *mu_theta_out = mu_theta;
  return s;
}

int cmd_theorems(const TheoremsArgs& a) {
  if (a.scenarios < 1) throw bge::ValidationError("--scenarios must be >= 1");
  json report;
  bool pass = true;

  {
    int passes = 0;
    double max_gap = 0.0;
    for (int k = 0; k < a.scenarios; ++k) {
      bge::RngStream rng(
          bge::derive_seed(a.seed, 41, static_cast<std::uint64_t>(k)));
      Eigen::VectorXd mu_theta;
      auto s = sample_scenario(rng, false, &mu_theta);
      auto r = bge::theorem1_decomposition(s, mu_theta);
      max_gap = std::max(max_gap, r.identity_gap);
      if (r.identity_gap <= 1e-10) ++passes;
    }
    report["identity"] = {{"scenarios", a.scenarios},
                          {"passes", passes},
                          {"max_gap", max_gap}};
    std::cout << "decomposition identity: " << passes << '/' << a.scenarios
              << " within 1e-10 (max gap " << max_gap << ")\n";
    pass = pass && passes == a.scenarios;
  }

  {
    int passes = 0;
    double max_ratio = 0.0;
    for (int k = 0; k < a.scenarios; ++k) {
      bge::RngStream rng(
          bge::derive_seed(a.seed, 43, static_cast<std::uint64_t>(k)));
      Eigen::VectorXd mu_theta;
      auto s = sample_scenario(rng, true, &mu_theta);
      auto r = bge::theorem1_decomposition(s, mu_theta);
      if (r.bound > 0.0) max_ratio = std::max(max_ratio, r.M / r.bound);
      if (r.in_theta_eps && r.bound_holds) ++passes;
    }
    report["lyapunov"] = {{"scenarios", a.scenarios},
                          {"passes", passes},
                          {"max_ratio", max_ratio}};
    std::cout << "bias bound in region: " << passes << '/' << a.scenarios
              << " hold (max M/bound " << max_ratio << ")\n";
    pass = pass && passes == a.scenarios;
  }

  {
    bge::RngStream rng(bge::derive_seed(a.seed, 47));
    Eigen::VectorXd mu_theta;
    auto s = sample_scenario(rng, false, &mu_theta);
    s.eta_star.setZero();
    auto r = bge::theorem1_decomposition(s, mu_theta);
    bool ok = r.alpha == 0.0 && r.M == 0.0;
    report["no_noise"] = {{"alpha", r.alpha}, {"M", r.M}, {"pass", ok}};
    std::cout << "noise-free scenario: alpha=" << r.alpha << " M=" << r.M
              << (ok ? " (ok)\n" : " (FAIL)\n");
    pass = pass && ok;
  }

  {
    bge::RngStream rng(bge::derive_seed(a.seed, 53));
    std::vector<Eigen::VectorXd> feats(5);
    for (auto& x : feats) {
      x.resize(3);
      for (int k = 0; k < 3; ++k) x[k] = 0.6 * rng.normal();
    }
    bge::Dataset d(std::move(feats));
    d.set_weight(0, 1, 2);
    d.set_weight(1, 2, 1);
    d.set_weight(3, 4, 1);
    bge::ModelParams m({{bge::EncoderKind::linear, 3, 0}}, 2);
    bge::random_init(m, rng);
    m.theta *= 0.6;
    m.set_gamma(0, 0, 0.3);
    const double beta = 0.5;
    const std::int64_t m1 = 2, m2 = 3;
    double lambda = bge::default_lambda(d, m1, m2);
    Eigen::VectorXd expected =
        bge::expected_stoch_grad(m, d, beta, lambda, m1, m2);
    Eigen::VectorXd lhs = bge::estimating_lhs(m, d, beta, lambda, m1, m2);
    Eigen::VectorXd closed = lhs / static_cast<double>(d.all_pair_count());
    double unbias =
        (expected - closed).norm() / std::max(1.0, closed.norm());
    double vm1 = bge::contrast_ratio(d) * static_cast<double>(m1);
    Eigen::VectorXd full = bge::embs_loss(m, d, beta).grad;
    double factor = (lhs - vm1 * full).norm() / std::max(1.0, lhs.norm());
    bool ok = unbias <= 1e-10 && factor <= 1e-10;
    report["enumeration"] = {{"unbiasedness_rel_err", unbias},
                             {"factorization_rel_err", factor},
                             {"pass", ok}};
    std::cout << "batch-mean enumeration: unbiasedness " << unbias
              << ", factorization " << factor << (ok ? " (ok)\n" : " (FAIL)\n");
    pass = pass && ok;
  }

  report["seed"] = a.seed;
  report["pass"] = pass;
  std::cout << "theorems: " << (pass ? "PASS" : "FAIL") << '\n';
  if (!a.out.empty()) {
    fs::path dir(a.out);
    ensure_dir(dir);
    write_json_file(dir / "report.json", report);
  }
  return pass ? kExitOk : kExitNumeric;
}

// ------------------------------------------------------------------ config

// A config file is a flat JSON object whose keys mirror the long flags of
// the chosen subcommand. Its values are injected as tokens before the
// explicit flags, so anything given on the command line wins.
void inject_config(CLI::App& app, std::vector<std::string>& args) {
  std::size_t sub_pos = args.size();
  CLI::App* sub = nullptr;
  for (std::size_t i = 0; i < args.size() && !sub; ++i) {
    for (auto* s : app.get_subcommands(nullptr)) {
      if (args[i] == s->get_name()) {
        sub = s;
        sub_pos = i;
        break;
      }
    }
  }
  if (!sub) return;

  std::string path;
  for (std::size_t i = sub_pos + 1; i < args.size(); ++i) {
    if (args[i] == "--config" && i + 1 < args.size())
      path = args[i + 1];
    else if (args[i].rfind("--config=", 0) == 0)
      path = args[i].substr(9);
  }
  if (path.empty()) return;

  std::ifstream in(path);
  if (!in) throw bge::IoError("cannot open config: " + path);
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::exception& e) {
    throw bge::ParseError("config " + path + ": " + e.what(), 0);
  }
  if (!doc.is_object())
    throw bge::ValidationError("config " + path + ": expected a JSON object");

  std::vector<std::string> tokens;
  for (const auto& [key, val] : doc.items()) {
    if (key == "config" || !sub->get_option_no_throw("--" + key))
      throw bge::ValidationError("config " + path + ": unknown key '" + key +
                                 "'");
    if (val.is_boolean()) {
      tokens.push_back("--" + key + (val.get<bool>() ? "=true" : "=false"));
    } else if (val.is_number() || val.is_string()) {
      tokens.push_back("--" + key);
      tokens.push_back(val.is_string() ? val.get<std::string>() : val.dump());
    } else if (val.is_array()) {
      std::string joined;
      for (const auto& item : val) {
        if (!item.is_number() && !item.is_string())
          throw bge::ValidationError("config " + path + ": key '" + key +
                                     "' has a non-scalar list entry");
        if (!joined.empty()) joined += ',';
        joined += item.is_string() ? item.get<std::string>() : item.dump();
      }
      tokens.push_back("--" + key);
      tokens.push_back(joined);
    } else {
      throw bge::ValidationError("config " + path + ": key '" + key +
                                 "' has an unsupported value type");
    }
  }
  args.insert(args.begin() + static_cast<std::ptrdiff_t>(sub_pos) + 1,
              tokens.begin(), tokens.end());
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{
      "bge: robust graph embedding from node features and noisy link "
      "weights.\nTrains inner-product similarity models under a "
      "density-power loss family\n(beta > 0) or the log-likelihood loss "
      "(beta = 0), and ships the synthetic\nbenchmark, clustering "
      "evaluation, and numeric diagnostics around them.\n\nExit codes: 0 "
      "ok, 2 validation/parse, 3 numeric, 4 I/O, 5 failed experiment "
      "cells."};
  app.require_subcommand(1);

  GenerateArgs gen;
  auto* g = app.add_subcommand(
      "generate", "Sample the clustered synthetic benchmark to disk");
  g->option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
  g->add_option("--config", "JSON config mirroring the flags; flags override");
  g->add_option("--n", gen.syn.n, "nodes (default 200)");
  g->add_option("--p", gen.syn.p, "data vector dimension (default 20)");
  g->add_option("--latent", gen.syn.latent_dim,
                "latent center dimension (default 5)");
  g->add_option("--clusters", gen.syn.clusters, "cluster count (default 4)");
  g->add_option("--within", gen.syn.within_prob,
                "within-cluster link probability (default 0.05)");
  g->add_option("--xi", gen.syn.xi,
                "cross-cluster link probability (default 0.01)");
  g->add_option("--target-mean-norm", gen.syn.target_mean_norm,
                "mean data-vector norm after rescaling (default 4)");
  g->add_option("--seed", gen.syn.seed, "RNG seed (default 1)");
  g->add_option("--out", gen.out, "output directory (default out)");

  TrainArgs tr;
  auto* t = app.add_subcommand(
      "train", "Fit an embedding by minibatch or full-batch descent");
  t->option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
  t->add_option("--config", "JSON config mirroring the flags; flags override");
  t->add_option("--features", tr.features, "feature TSV/CSV, one node per row")
      ->required();
  t->add_option("--edges", tr.edges, "edge list: i j [weight], 0-based")
      ->required();
  t->add_option("--beta", tr.beta,
                "loss exponent; 0 selects the log-likelihood loss "
                "(default 0.5)");
  t->add_option("--lambda", tr.lambda,
                "repulsion weight for sgd; 0 = |I|/|W| * m1/m2 (default 0)");
  t->add_option("--m1", tr.m1, "positive pairs per batch (default 32)");
  t->add_option("--m2", tr.m2, "contrast pairs per batch (default 64)");
  t->add_option("--delta0", tr.delta0, "initial step size (default 0.01)");
  t->add_option("--alpha", tr.alpha,
                "step decay exponent in (0,1] (default 0.6)");
  t->add_option("--iters", tr.iters, "iteration budget (default 2000)");
  t->add_option("--radius", tr.radius,
                "projection ball radius for sgd (default 10)");
  t->add_option("--ridge", tr.ridge,
                "encoder-block ridge for fullbatch (default 1e-4)");
  t->add_option("--tol", tr.tol,
                "gradient-norm stop for fullbatch (default 1e-5)");
  t->add_option("--encoder", tr.encoder, "encoder family (default linear)")
      ->check(CLI::IsMember({"linear", "mlp1"}));
  t->add_option("--hidden", tr.hidden,
                "hidden width for mlp1 (default 16)");
  t->add_option("--dim", tr.dim, "embedding dimension (default 2)");
  t->add_option("--optimizer", tr.optimizer, "trainer (default sgd)")
      ->check(CLI::IsMember({"sgd", "fullbatch"}));
  t->add_option("--eval-every", tr.eval_every,
                "trajectory record cadence for sgd (default 100)");
  t->add_flag("--gamma-only", tr.gamma_only,
              "freeze encoder blocks, train offsets only");
  t->add_option("--init", tr.init,
                "checkpoint to start from (sgd also recenters its "
                "projection ball there)");
  t->add_option("--seed", tr.seed, "RNG seed (default 1)");
  t->add_option("--out", tr.out, "output directory (default out)");

  EvalArgs ev;
  auto* e = app.add_subcommand(
      "eval", "Embed, cluster with k-means, and score against labels");
  e->option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
  e->add_option("--config", "JSON config mirroring the flags; flags override");
  e->add_option("--checkpoint", ev.checkpoint, "model checkpoint JSON")
      ->required();
  e->add_option("--features", ev.features, "feature TSV/CSV, one node per row")
      ->required();
  e->add_option("--labels", ev.labels, "ground-truth labels, one per line")
      ->required();
  e->add_option("--k", ev.k, "cluster count (default 4)");
  e->add_option("--restarts", ev.restarts, "k-means restarts (default 10)");
  e->add_option("--seed", ev.seed, "RNG seed (default 1)");
  e->add_option("--out", ev.out, "output directory (default out)");

  ExperimentArgs ex;
  auto* x = app.add_subcommand(
      "experiment",
      "Robustness grid: generate, train full-batch, cluster, tabulate");
  x->option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
  x->add_option("--config", "JSON config mirroring the flags; flags override");
  x->add_option("--xi", ex.xi_list,
                "comma-separated noise rates (default 0.01,0.02,0.03)");
  x->add_option("--betas", ex.beta_list,
                "comma-separated loss exponents (default 0,0.1,0.5,1)");
  x->add_option("--repeats", ex.repeats, "runs per cell, >= 2 (default 10)");
  x->add_option("--n", ex.n, "nodes per dataset (default 200)");
  x->add_option("--p", ex.p, "data vector dimension (default 20)");
  x->add_option("--latent", ex.latent, "latent dimension (default 5)");
  x->add_option("--clusters", ex.clusters,
                "cluster count, also the k for k-means (default 4)");
  x->add_option("--within", ex.within,
                "within-cluster link probability (default 0.05)");
  x->add_option("--target-mean-norm", ex.target_mean_norm,
                "mean data-vector norm (default 4)");
  x->add_option("--dim", ex.dim, "embedding dimension (default 2)");
  x->add_option("--ridge", ex.ridge, "encoder ridge (default 3)");
  x->add_option("--iters", ex.iters, "full-batch iteration cap (default 800)");
  x->add_option("--tol", ex.tol, "gradient-norm stop (default 1e-5)");
  x->add_option("--restarts", ex.restarts, "k-means restarts (default 10)");
  x->add_option("--seed", ex.seed, "base seed; cells derive from it "
                                   "(default 1)");
  x->add_option("--out", ex.out, "output directory (default out)");

  GradcheckArgs gc;
  auto* c = app.add_subcommand(
      "gradcheck", "Audit analytic gradients against finite differences");
  c->option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
  c->add_option("--config", "JSON config mirroring the flags; flags override");
  c->add_option("--seed", gc.seed, "RNG seed (default 1)");
  c->add_option("--draws", gc.draws,
                "random instances per loss/encoder pair (default 20)");
  c->add_option("--tol", gc.tol, "max relative error allowed (default 1e-5)");
  c->add_option("--limit-betas", gc.limit_betas,
                "comma-separated small betas for the embs -> nll limit check");
  c->add_option("--limit-draws", gc.limit_draws,
                "instances per limit beta (default 10)");
  c->add_flag("--inject-sign-flip", gc.inject_sign_flip,
              "negate analytic gradients before comparing (negative-control "
              "test hook)");
  c->add_option("--out", gc.out, "optional directory for report.json");

  TheoremsArgs th;
  auto* h = app.add_subcommand(
      "theorems",
      "Randomized checks of the bias decomposition and batch-mean identity");
  h->option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
  h->add_option("--config", "JSON config mirroring the flags; flags override");
  h->add_option("--seed", th.seed, "RNG seed (default 1)");
  h->add_option("--scenarios", th.scenarios,
                "scenario count per property (default 100)");
  h->add_option("--out", th.out, "optional directory for report.json");

  std::vector<std::string> args(argv + 1, argv + argc);
  try {
    inject_config(app, args);
  } catch (const bge::IoError& err) {
    std::cerr << "error: " << err.what() << '\n';
    return kExitIo;
  } catch (const bge::ParseError& err) {
    std::cerr << "error: " << err.what() << '\n';
    return kExitValidation;
  } catch (const bge::ValidationError& err) {
    std::cerr << "error: " << err.what() << '\n';
    return kExitValidation;
  }

  std::reverse(args.begin(), args.end());
  try {
    app.parse(std::move(args));
  } catch (const CLI::ParseError& err) {
    int rc = app.exit(err);
    return rc == 0 ? kExitOk : kExitValidation;
  }

  try {
    if (app.got_subcommand(g)) return cmd_generate(gen);
    if (app.got_subcommand(t)) return cmd_train(tr);
    if (app.got_subcommand(e)) return cmd_eval(ev);
    if (app.got_subcommand(x)) return cmd_experiment(ex);
    if (app.got_subcommand(c)) return cmd_gradcheck(gc);
    if (app.got_subcommand(h)) return cmd_theorems(th);
  } catch (const bge::ParseError& err) {
    std::cerr << "error: " << err.what() << '\n';
    return kExitValidation;
  } catch (const bge::ValidationError& err) {
    std::cerr << "error: " << err.what() << '\n';
    return kExitValidation;
  } catch (const bge::NumericError& err) {
    std::cerr << "error: " << err.what() << '\n';
    return kExitNumeric;
  } catch (const bge::IoError& err) {
    std::cerr << "error: " << err.what() << '\n';
    return kExitIo;
  } catch (const json::exception& err) {
    std::cerr << "error: " << err.what() << '\n';
    return kExitValidation;
  }
  return kExitOk;
}
