// End-to-end checks of the command-line binary: exit codes, file outputs,
// config handling, and rerun determinism. Each test works in its own
// scratch directory under the system temp root.

#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "bge/bge.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct CliRun {
  int code = -1;
  std::string output;  // stdout + stderr
};

fs::path scratch_dir(const std::string& tag) {
  static int counter = 0;
  fs::path dir = fs::temp_directory_path() /
                 ("bge_cli_" + tag + "_" + std::to_string(::getpid()) + "_" +
                  std::to_string(counter++));
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

CliRun run_cli(const std::string& args, const fs::path& dir) {
  fs::path log = dir / "cli_log.txt";
  std::string cmd =
      std::string(BGE_CLI_PATH) + " " + args + " > " + log.string() + " 2>&1";
  int raw = std::system(cmd.c_str());
  CliRun r;
  r.code = WIFEXITED(raw) ? WEXITSTATUS(raw) : -1;
  std::ifstream in(log);
  std::stringstream ss;
  ss << in.rdbuf();
  r.output = ss.str();
  return r;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  EXPECT_TRUE(in.good()) << "missing file " << p;
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::size_t line_count(const fs::path& p) {
  std::string text = slurp(p);
  std::size_t lines = 0;
  for (char c : text)
    if (c == '\n') ++lines;
  return lines;
}

json load_json(const fs::path& p) { return json::parse(slurp(p)); }

}  // namespace

TEST(Cli, HelpAndBadUsageExitCodes) {
  fs::path dir = scratch_dir("usage");
  EXPECT_EQ(run_cli("--help", dir).code, 0);
  EXPECT_EQ(run_cli("train --help", dir).code, 0);
  EXPECT_EQ(run_cli("frobnicate", dir).code, 2);
  EXPECT_EQ(run_cli("train --no-such-flag 1", dir).code, 2);
  // Required inputs missing entirely.
  EXPECT_EQ(run_cli("train", dir).code, 2);
  fs::remove_all(dir);
}

TEST(Cli, GenerateWritesDeterministicFiles) {
  fs::path dir = scratch_dir("gen");
  std::string base = "generate --n 32 --p 5 --clusters 4 --within 0.4 --xi 0 "
                     "--seed 11 --out ";
  ASSERT_EQ(run_cli(base + (dir / "a").string(), dir).code, 0);
  ASSERT_EQ(run_cli(base + (dir / "b").string(), dir).code, 0);
  for (const char* name :
       {"features.tsv", "edges.tsv", "labels.tsv", "manifest.json"})
    EXPECT_EQ(slurp(dir / "a" / name), slurp(dir / "b" / name)) << name;
  EXPECT_EQ(line_count(dir / "a" / "labels.tsv"), 32u);

  // xi = 0: every edge joins two nodes with the same label.
  std::vector<int> labels;
  {
    std::ifstream in(dir / "a" / "labels.tsv");
    int v;
    while (in >> v) labels.push_back(v);
  }
  std::ifstream edges(dir / "a" / "edges.tsv");
  int i, j, w;
  std::size_t edge_count = 0;
  while (edges >> i >> j >> w) {
    ++edge_count;
    EXPECT_EQ(labels[static_cast<std::size_t>(i)],
              labels[static_cast<std::size_t>(j)]);
  }
  EXPECT_GT(edge_count, 0u);

  json manifest = load_json(dir / "a" / "manifest.json");
  EXPECT_EQ(manifest["config"]["n"], 32);
  EXPECT_EQ(manifest["config"]["seed"], 11);
  EXPECT_EQ(manifest["stats"]["positive_pairs"].get<std::size_t>(),
            edge_count);
  fs::remove_all(dir);
}

TEST(Cli, GenerateRejectsBadShape) {
  fs::path dir = scratch_dir("genbad");
  EXPECT_EQ(run_cli("generate --n 10 --clusters 4 --out " +
                        (dir / "x").string(),
                    dir)
                .code,
            2);
  fs::remove_all(dir);
}

TEST(Cli, ConfigFileMirrorsFlagsAndFlagsWin) {
  fs::path dir = scratch_dir("config");
  {
    std::ofstream cfg(dir / "cfg.json");
    cfg << R"({"n": 24, "clusters": 3, "xi": 0.25, "seed": 9, "out": ")"
        << (dir / "from_file").string() << R"("})";
  }
  std::string with_cfg = "generate --config " + (dir / "cfg.json").string();
  ASSERT_EQ(run_cli(with_cfg + " --xi 0.05", dir).code, 0);
  json manifest = load_json(dir / "from_file" / "manifest.json");
  EXPECT_EQ(manifest["config"]["n"], 24);          // from the file
  EXPECT_EQ(manifest["config"]["clusters"], 3);    // from the file
  EXPECT_EQ(manifest["config"]["xi"], 0.05);       // flag overrides file
  EXPECT_EQ(manifest["config"]["seed"], 9);

  {
    std::ofstream cfg(dir / "unknown.json");
    cfg << R"({"n": 24, "wibble": 1})";
  }
  auto r = run_cli("generate --config " + (dir / "unknown.json").string(), dir);
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.output.find("wibble"), std::string::npos);

  {
    std::ofstream cfg(dir / "broken.json");
    cfg << "{not json";
  }
  EXPECT_EQ(run_cli("generate --config " + (dir / "broken.json").string(), dir)
                .code,
            2);
  EXPECT_EQ(run_cli("generate --config " + (dir / "absent.json").string(), dir)
                .code,
            4);
  fs::remove_all(dir);
}

namespace {

// Small shared dataset on disk for the training tests.
fs::path make_dataset(const fs::path& dir, const std::string& extra = "") {
  fs::path data = dir / "data";
  EXPECT_EQ(run_cli("generate --n 40 --p 6 --clusters 4 --within 0.35 "
                    "--xi 0.05 --seed 7 " +
                        extra + " --out " + data.string(),
                    dir)
                .code,
            0);
  return data;
}

}  // namespace

TEST(Cli, TrainSgdRerunsBitIdentical) {
  fs::path dir = scratch_dir("sgd");
  fs::path data = make_dataset(dir);
  std::string base = "train --features " + (data / "features.tsv").string() +
                     " --edges " + (data / "edges.tsv").string() +
                     " --beta 0.5 --optimizer sgd --iters 300 --m1 12 "
                     "--m2 24 --eval-every 100 --seed 21 --out ";
  ASSERT_EQ(run_cli(base + (dir / "a").string(), dir).code, 0);
  ASSERT_EQ(run_cli(base + (dir / "b").string(), dir).code, 0);
  for (const char* name : {"checkpoint.json", "trajectory.jsonl",
                           "metrics.json"})
    EXPECT_EQ(slurp(dir / "a" / name), slurp(dir / "b" / name)) << name;

  EXPECT_EQ(line_count(dir / "a" / "trajectory.jsonl"), 3u);
  json metrics = load_json(dir / "a" / "metrics.json");
  EXPECT_EQ(metrics["optimizer"], "sgd");
  EXPECT_EQ(metrics["loss_kind"], "embs");
  EXPECT_TRUE(metrics.contains("estimating_residual"));
  EXPECT_TRUE(metrics.contains("projection_hits"));

  json first = json::parse(slurp(dir / "a" / "trajectory.jsonl")
                               .substr(0, slurp(dir / "a" / "trajectory.jsonl")
                                              .find('\n')));
  EXPECT_EQ(first["t"], 100);
  EXPECT_TRUE(first.contains("full_embs"));
  EXPECT_TRUE(first.contains("theta_norm"));
  fs::remove_all(dir);
}

TEST(Cli, TrainRejectsBetaZeroWithSgd) {
  fs::path dir = scratch_dir("beta0sgd");
  fs::path data = make_dataset(dir);
  auto r = run_cli("train --features " + (data / "features.tsv").string() +
                       " --edges " + (data / "edges.tsv").string() +
                       " --beta 0 --optimizer sgd --out " +
                       (dir / "x").string(),
                   dir);
  EXPECT_EQ(r.code, 2);
  fs::remove_all(dir);
}

TEST(Cli, TrainFullbatchLossTraceDecreasesAtBetaZero) {
  fs::path dir = scratch_dir("fbnll");
  fs::path data = make_dataset(dir);
  ASSERT_EQ(run_cli("train --features " + (data / "features.tsv").string() +
                        " --edges " + (data / "edges.tsv").string() +
                        " --beta 0 --optimizer fullbatch --iters 120 "
                        "--seed 4 --out " +
                        (dir / "run").string(),
                    dir)
                .code,
            0);
  json metrics = load_json(dir / "run" / "metrics.json");
  EXPECT_EQ(metrics["loss_kind"], "nll");
  std::istringstream lines(slurp(dir / "run" / "trajectory.jsonl"));
  std::string line;
  double prev = std::numeric_limits<double>::infinity();
  std::size_t n = 0;
  while (std::getline(lines, line)) {
    double loss = json::parse(line)["loss"].get<double>();
    EXPECT_LE(loss, prev + 1e-12);
    prev = loss;
    ++n;
  }
  EXPECT_GE(n, 2u);
  fs::remove_all(dir);
}

TEST(Cli, TrainFullbatchResidualTracksGradientTol) {
  fs::path dir = scratch_dir("resid");
  fs::path data = dir / "data";
  ASSERT_EQ(run_cli("generate --n 100 --xi 0.03 --seed 5 --out " +
                        data.string(),
                    dir)
                .code,
            0);
  ASSERT_EQ(run_cli("train --features " + (data / "features.tsv").string() +
                        " --edges " + (data / "edges.tsv").string() +
                        " --beta 0.5 --optimizer fullbatch --ridge 0 "
                        "--iters 4000 --tol 1e-4 --seed 2 --out " +
                        (dir / "run").string(),
                    dir)
                .code,
            0);
  json metrics = load_json(dir / "run" / "metrics.json");
  // With the canonical batch sizes the estimating equation is an exact
  // rescaling of the loss gradient, so a converged run keeps the per-pair
  // residual within a small multiple of the stopping tolerance.
  EXPECT_TRUE(metrics["converged"].get<bool>());
  EXPECT_LT(metrics["estimating_residual"].get<double>(), 10.0 * 1e-4);
  fs::remove_all(dir);
}

TEST(Cli, EvalPerfectOnSeparatedBlobs) {
  fs::path dir = scratch_dir("evalblobs");
  const int per = 5;
  std::vector<Eigen::Vector2d> centers = {{12.0, 0.0}, {0.0, 12.0},
                                          {-12.0, -12.0}};
  {
    std::ofstream feats(dir / "features.tsv");
    std::ofstream labels(dir / "labels.tsv");
    for (std::size_t c = 0; c < centers.size(); ++c)
      for (int r = 0; r < per; ++r) {
        feats << centers[c][0] + 0.01 * r << '\t' << centers[c][1] - 0.01 * r
              << '\n';
        labels << c << '\n';
      }
  }
  bge::ModelParams identity({{bge::EncoderKind::linear, 2, 0}}, 2);
  identity.theta[0] = 1.0;  // column-major 2x2 identity
  identity.theta[3] = 1.0;
  bge::save_checkpoint(identity, dir / "ckpt.json");

  ASSERT_EQ(run_cli("eval --checkpoint " + (dir / "ckpt.json").string() +
                        " --features " + (dir / "features.tsv").string() +
                        " --labels " + (dir / "labels.tsv").string() +
                        " --k 3 --seed 2 --out " + (dir / "out").string(),
                    dir)
                .code,
            0);
  json metrics = load_json(dir / "out" / "metrics.json");
  EXPECT_DOUBLE_EQ(metrics["purity"].get<double>(), 1.0);
  EXPECT_DOUBLE_EQ(metrics["nmi"].get<double>(), 1.0);
  EXPECT_EQ(metrics["k"], 3);
  EXPECT_EQ(line_count(dir / "out" / "assignments.tsv"), 15u);
  EXPECT_EQ(line_count(dir / "out" / "embeddings.tsv"), 15u);
  fs::remove_all(dir);
}

TEST(Cli, EvalRejectsMismatchedLabels) {
  fs::path dir = scratch_dir("evalbad");
  fs::path data = make_dataset(dir);
  ASSERT_EQ(run_cli("train --features " + (data / "features.tsv").string() +
                        " --edges " + (data / "edges.tsv").string() +
                        " --optimizer fullbatch --iters 5 --seed 1 --out " +
                        (dir / "run").string(),
                    dir)
                .code,
            0);
  {
    std::ofstream labels(dir / "short_labels.tsv");
    labels << "0\n1\n0\n";
  }
  EXPECT_EQ(run_cli("eval --checkpoint " +
                        (dir / "run" / "checkpoint.json").string() +
                        " --features " + (data / "features.tsv").string() +
                        " --labels " + (dir / "short_labels.tsv").string() +
                        " --out " + (dir / "out").string(),
                    dir)
                .code,
            2);
  fs::remove_all(dir);
}

TEST(Cli, ExperimentSchemaAndDeterminism) {
  fs::path dir = scratch_dir("exp");
  std::string base = "experiment --xi 0,0.3 --betas 0,0.5 --repeats 2 "
                     "--n 24 --p 5 --latent 3 --clusters 4 --within 0.4 "
                     "--iters 40 --restarts 4 --seed 3 --out ";
  ASSERT_EQ(run_cli(base + (dir / "a").string(), dir).code, 0);
  ASSERT_EQ(run_cli(base + (dir / "b").string(), dir).code, 0);
  for (const char* name :
       {"results.csv", "summary.csv", "summary.json", "table.txt"})
    EXPECT_EQ(slurp(dir / "a" / name), slurp(dir / "b" / name)) << name;

  std::string results = slurp(dir / "a" / "results.csv");
  EXPECT_EQ(results.substr(0, results.find('\n')),
            "xi,beta,run,seed,purity,nmi,loss_final,residual");
  EXPECT_EQ(line_count(dir / "a" / "results.csv"), 1u + 2u * 2u * 2u);
  EXPECT_EQ(line_count(dir / "a" / "summary.csv"), 1u + 4u);

  // Two runs per cell: the standard error must equal half the absolute
  // difference of the two purities.
  std::istringstream in(results);
  std::string line;
  std::getline(in, line);  // header
  std::vector<double> cell;
  while (std::getline(in, line)) {
    std::stringstream fields(line);
    std::string tok;
    std::vector<std::string> cols;
    while (std::getline(fields, tok, ',')) cols.push_back(tok);
    ASSERT_EQ(cols.size(), 8u);
    if (cols[0] == "0" && cols[1] == "0") cell.push_back(std::stod(cols[4]));
  }
  ASSERT_EQ(cell.size(), 2u);
  json summary = load_json(dir / "a" / "summary.json");
  for (const auto& c : summary["cells"]) {
    if (c["xi"].get<double>() == 0.0 && c["beta"].get<double>() == 0.0) {
      EXPECT_NEAR(c["purity"]["se"].get<double>(),
                  std::abs(cell[0] - cell[1]) / 2.0, 1e-12);
    }
  }
  fs::remove_all(dir);
}

TEST(Cli, ExperimentValidatesGrid) {
  fs::path dir = scratch_dir("expbad");
  EXPECT_EQ(run_cli("experiment --repeats 1 --out " + (dir / "x").string(),
                    dir)
                .code,
            2);
  EXPECT_EQ(run_cli("experiment --xi 0.1,0.1 --repeats 2 --out " +
                        (dir / "y").string(),
                    dir)
                .code,
            2);
  fs::remove_all(dir);
}

TEST(Cli, GradcheckPassesAndFlipsFail) {
  fs::path dir = scratch_dir("gradcheck");
  auto ok = run_cli("gradcheck --draws 5 --seed 3 --limit-betas 1e-6 "
                    "--limit-draws 4 --out " +
                        (dir / "rep").string(),
                    dir);
  EXPECT_EQ(ok.code, 0);
  EXPECT_NE(ok.output.find("PASS"), std::string::npos);
  json report = load_json(dir / "rep" / "report.json");
  EXPECT_TRUE(report["pass"].get<bool>());
  EXPECT_LT(report["max_rel_err"].get<double>(), 1e-5);
  ASSERT_EQ(report["limit_checks"].size(), 1u);
  EXPECT_TRUE(report["limit_checks"][0]["pass"].get<bool>());

  auto flipped = run_cli("gradcheck --draws 5 --seed 3 --inject-sign-flip",
                         dir);
  EXPECT_EQ(flipped.code, 3);
  EXPECT_NE(flipped.output.find("FAIL"), std::string::npos);
  fs::remove_all(dir);
}

TEST(Cli, TheoremsReportPasses) {
  fs::path dir = scratch_dir("theorems");
  auto r = run_cli("theorems --scenarios 25 --seed 6 --out " +
                       (dir / "rep").string(),
                   dir);
  EXPECT_EQ(r.code, 0);
  EXPECT_NE(r.output.find("PASS"), std::string::npos);
  json report = load_json(dir / "rep" / "report.json");
  EXPECT_TRUE(report["pass"].get<bool>());
  EXPECT_EQ(report["identity"]["passes"], 25);
  EXPECT_EQ(report["lyapunov"]["passes"], 25);
  EXPECT_TRUE(report["enumeration"]["pass"].get<bool>());
  EXPECT_EQ(report["no_noise"]["alpha"], 0.0);
  fs::remove_all(dir);
}
