#include <sys/wait.h>
#include <unistd.h>

#include <array>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <limits>
#include <map>
#include <sstream>

#include <fmt/format.h>
#include <gtest/gtest.h>
#include <json.hpp>

#include "oracles.h"
#include "qexit/cli.h"
#include "qexit/ingest.h"
#include "qexit/model.h"
#include "qexit/report.h"
#include "qexit/scorer.h"

namespace qexit {
namespace {

namespace fs = std::filesystem;

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

std::vector<std::vector<std::string>> read_tsv(const fs::path& p) {
  std::vector<std::vector<std::string>> rows;
  std::istringstream in(slurp(p));
  std::string line;
  while (std::getline(in, line)) {
    std::vector<std::string> cells;
    std::istringstream ls(line);
    std::string cell;
    while (std::getline(ls, cell, '\t')) cells.push_back(cell);
    rows.push_back(cells);
  }
  return rows;
}

class CliTest : public ::testing::Test {
 protected:
  void SetUp() override {
    const auto* info = ::testing::UnitTest::GetInstance()->current_test_info();
    root_ = fs::temp_directory_path() /
            fmt::format("qexit_{}_{}_{}", getpid(), info->test_suite_name(), info->name());
    fs::remove_all(root_);
    fs::create_directories(root_);
  }
  void TearDown() override { fs::remove_all(root_); }

  // Synthetic model + datasets written by gen-synthetic.
  RunConfig generated(std::size_t trees = 200, std::size_t queries = 60) {
    RunConfig gen;
    gen.out_dir = (root_ / "data").string();
    gen.seed = 7;
    gen.gen_trees = trees;
    gen.gen_queries = queries;
    gen.gen_docs = 20;
    gen.gen_features = 8;
    std::ostringstream log;
    cmd_gen(gen, log);
    RunConfig cfg;
    cfg.model_path = (root_ / "data" / "model.json").string();
    cfg.test_path = (root_ / "data" / "test.letor").string();
    cfg.valid_path = (root_ / "data" / "valid.letor").string();
    cfg.threads = 2;
    return cfg;
  }

  fs::path root_;
};

TEST_F(CliTest, ScoreWritesOneRowPerQueryMatchingLibrary) {
  auto cfg = generated();
  cfg.out_dir = (root_ / "score").string();
  std::ostringstream log;
  cmd_score(cfg, log);
  auto rows = read_tsv(root_ / "score" / "scores.tsv");
  auto ds = read_letor_file(cfg.test_path);
  auto e = read_model_file(cfg.model_path, ModelFormat::kCanonical);
  ASSERT_EQ(rows.size(), ds.groups.size() + 1);
  EXPECT_EQ(rows[0][0], "query_id");
  for (std::size_t q = 0; q < ds.groups.size(); ++q) {
    const auto scores = score_full(e, ds.groups[q]);
    const auto labels = ds.groups[q].labels();
    EXPECT_EQ(rows[q + 1][0], ds.groups[q].query_id);
    EXPECT_EQ(std::stod(rows[q + 1][2]), ndcg_at_k(scores, labels, 10).value);
  }
  EXPECT_TRUE(fs::exists(root_ / "score" / "stats.tsv"));
}

TEST_F(CliTest, MissingModelFailsWithDiagnostic) {
  const auto err = root_ / "stderr.txt";
  const std::string cmd = fmt::format(
      "'{}' score --model '{}' --test '{}' --out-dir '{}' 2> '{}'", QEXIT_CLI_PATH,
      (root_ / "nope.json").string(), (root_ / "nope.letor").string(),
      (root_ / "out").string(), err.string());
  const int status = std::system(cmd.c_str());
  ASSERT_TRUE(WIFEXITED(status));
  EXPECT_NE(WEXITSTATUS(status), 0);
  EXPECT_FALSE(slurp(err).empty());
  EXPECT_FALSE(fs::exists(root_ / "out"));
}

TEST_F(CliTest, ParseErrorExitsNonZero) {
  auto cfg = generated();
  std::ofstream(root_ / "bad.letor") << "1 qid:1 1:0.5\nnot a line\n";
  const std::string cmd = fmt::format(
      "'{}' score --model '{}' --test '{}' --out-dir '{}' 2> /dev/null", QEXIT_CLI_PATH,
      cfg.model_path, (root_ / "bad.letor").string(), (root_ / "out").string());
  const int status = std::system(cmd.c_str());
  ASSERT_TRUE(WIFEXITED(status));
  EXPECT_NE(WEXITSTATUS(status), 0);
  EXPECT_FALSE(fs::exists(root_ / "out"));
}

TEST_F(CliTest, OracleCurveAndHistogram) {
  auto cfg = generated(40, 30);
  cfg.stride = 1;
  cfg.out_dir = (root_ / "oracle").string();
  std::ostringstream log;
  cmd_oracle(cfg, log);
  auto curve = read_tsv(root_ / "oracle" / "oracle_curve.tsv");
  ASSERT_EQ(curve.size(), 41u);
  auto exits = read_tsv(root_ / "oracle" / "oracle_exits.tsv");
  ASSERT_EQ(exits.size(), 31u);
  double oracle_sum = 0;
  for (std::size_t i = 1; i < exits.size(); ++i) {
    oracle_sum += std::stod(exits[i][3]);
    EXPECT_GE(std::stod(exits[i][3]), std::stod(exits[i][4]));
  }
  EXPECT_NEAR(std::stod(curve.back()[2]), oracle_sum / 30, 1e-12);
  std::size_t hist_total = 0;
  for (const auto& row : read_tsv(root_ / "oracle" / "exit_histogram.tsv")) {
    if (row[0] != "bin_start") hist_total += std::stoul(row[1]);
  }
  EXPECT_EQ(hist_total, 30u);
  std::size_t curve_total = 0;
  for (std::size_t i = 1; i < curve.size(); ++i) curve_total += std::stoul(curve[i][3]);
  EXPECT_EQ(curve_total, 30u);
}

// Four trees; tree t reads feature t and adds 0, 4^t or 2 * 4^t. The newest
// tree dominates everything before it, so the ranking at checkpoint t is set
// by feature t alone: the document with feature 2 first, 1 second, 0 last.
void write_class_fixture(const fs::path& dir) {
  std::vector<RegressionTree> trees;
  for (std::size_t t = 1; t <= 4; ++t) {
    const double unit = std::pow(4.0, static_cast<double>(t));
    trees.emplace_back(std::vector<TreeNode>{
        TreeNode::split(t, 0.5, 1, 2, false), TreeNode::leaf(0.0),
        TreeNode::split(t, 1.5, 3, 4, false), TreeNode::leaf(unit),
        TreeNode::leaf(2 * unit)});
  }
  std::ofstream model(dir / "model.json");
  write_canonical_model(Ensemble(std::move(trees), 4), model);

  // Documents A, B, C carry labels 2, 1, 0. Rankings and their NDCG@10:
  //   ABC 1.000  BAC 0.797  BCA 0.689  CBA 0.587
  const std::map<std::string, std::array<int, 3>> rank_features{
      {"ABC", {2, 1, 0}}, {"BAC", {1, 2, 0}}, {"BCA", {0, 2, 1}}, {"CBA", {0, 1, 2}}};
  const std::vector<std::pair<std::string, std::vector<std::string>>> queries{
      {"c1", {"ABC", "BAC", "BCA", "CBA"}},  // decreasing
      {"c2", {"BAC", "ABC", "BCA", "CBA"}},  // up, then below the start
      {"c3", {"ABC", "ABC", "ABC", "ABC"}},  // flat
      {"c4", {"BAC", "ABC", "CBA", "BAC"}},  // same ends, bumps between
      {"c5", {"CBA", "BCA", "BAC", "ABC"}},  // increasing
      {"c6", {"CBA", "ABC", "BCA", "BAC"}},  // up, then partly down
  };
  std::ofstream letor(dir / "classes.letor");
  for (const auto& [qid, ranks] : queries) {
    for (int d = 0; d < 3; ++d) {
      letor << (2 - d) << " qid:" << qid;
      for (std::size_t t = 0; t < 4; ++t) {
        letor << " " << t + 1 << ":" << rank_features.at(ranks[t])[d];
      }
      letor << "\n";
    }
  }
}

TEST_F(CliTest, ClassifyEngineeredFixture) {
  write_class_fixture(root_);
  RunConfig cfg;
  cfg.model_path = (root_ / "model.json").string();
  cfg.test_path = (root_ / "classes.letor").string();
  cfg.stride = 1;
  cfg.out_dir = (root_ / "classify").string();
  std::ostringstream log;
  cmd_classify(cfg, log);
  auto rows = read_tsv(root_ / "classify" / "classes.tsv");
  ASSERT_EQ(rows.size(), 7u);
  for (int c = 1; c <= 6; ++c) {
    EXPECT_EQ(rows[c][0], fmt::format("c{}", c));
    EXPECT_EQ(rows[c][1], std::to_string(c)) << rows[c][0];
  }
  auto counts = read_tsv(root_ / "classify" / "class_counts.tsv");
  for (int c = 1; c <= 6; ++c) EXPECT_EQ(counts[c][2], "1");

  cfg.epsilon = std::numeric_limits<double>::infinity();
  cfg.out_dir = (root_ / "flat").string();
  cmd_classify(cfg, log);
  auto flat = read_tsv(root_ / "flat" / "class_counts.tsv");
  EXPECT_EQ(flat[3][2], "6");
}

TEST_F(CliTest, ClassifyCountsSumToQueries) {
  auto cfg = generated(100, 50);
  cfg.out_dir = (root_ / "classify").string();
  std::ostringstream log;
  cmd_classify(cfg, log);
  std::size_t total = 0;
  for (const auto& row : read_tsv(root_ / "classify" / "class_counts.tsv")) {
    if (row[0] != "class") total += std::stoul(row[2]);
  }
  EXPECT_EQ(total, 50u);
}

TEST_F(CliTest, PlaceSingleSentinelTwoCandidates) {
  auto cfg = generated(75, 40);
  cfg.num_sentinels = 1;
  cfg.test_path.clear();
  cfg.out_dir = (root_ / "place").string();
  std::ostringstream log;
  cmd_place(cfg, log);
  auto ranking = read_tsv(root_ / "place" / "placements.tsv");
  ASSERT_EQ(ranking.size(), 3u);  // header + {25}, {50}
  EXPECT_GE(std::stod(ranking[1][2]), std::stod(ranking[2][2]));
  auto winner = nlohmann::json::parse(slurp(root_ / "place" / "placement.json"));
  EXPECT_EQ(winner["split"], "validation");
  EXPECT_FALSE(fs::exists(root_ / "place" / "report.tsv"));
}

TEST_F(CliTest, PlaceMatchesBruteForceAndEvaluatesOnTest) {
  auto cfg = generated(200, 50);
  cfg.num_sentinels = 2;
  cfg.out_dir = (root_ / "place").string();
  std::ostringstream log;
  cmd_place(cfg, log);
  auto winner = nlohmann::json::parse(slurp(root_ / "place" / "placement.json"));
  const auto chosen = winner["sentinels"].get<std::vector<std::size_t>>();

  auto e = read_model_file(cfg.model_path, ModelFormat::kCanonical);
  auto ds = read_letor_file(cfg.valid_path);
  auto cps = make_checkpoints(200, 25, false);
  std::vector<NdcgTrajectory> trajs;
  for (const auto& m : score_dataset(e, ds, cps)) {
    const auto& g = ds.groups[trajs.size()];
    trajs.push_back(ndcg_trajectory(m, g.labels(), 10));
  }
  std::vector<std::size_t> cands(cps.positions().begin(), cps.positions().end() - 1);
  auto want = testing::brute_force_placement(2, cands, trajs);
  EXPECT_EQ(chosen, want.positions);
  EXPECT_EQ(winner["objective"].get<double>(), want.objective);

  auto ranking = read_tsv(root_ / "place" / "placements.tsv");
  EXPECT_EQ(ranking.size(), 22u);
  for (std::size_t i = 1; i < ranking.size(); ++i) {
    EXPECT_GE(want.objective, std::stod(ranking[i][2]));
  }
  auto report = nlohmann::json::parse(slurp(root_ / "place" / "report.json"));
  EXPECT_EQ(report["split"], "test");
  EXPECT_EQ(report["sentinels"].get<std::vector<std::size_t>>(), chosen);
}

TEST_F(CliTest, SameSplitPlacementIsLabelled) {
  auto cfg = generated(50, 20);
  cfg.valid_path.clear();
  cfg.num_sentinels = 1;
  cfg.out_dir = (root_ / "place").string();
  std::ostringstream log;
  cmd_place(cfg, log);
  auto winner = nlohmann::json::parse(slurp(root_ / "place" / "placement.json"));
  EXPECT_EQ(winner["same_split"], true);
  EXPECT_NE(winner["split"].get<std::string>().find("exploratory"), std::string::npos);
}

TEST_F(CliTest, EvaluateThreeGroupReport) {
  auto cfg = generated(400, 200);
  cfg.sentinels = {25, 300};
  cfg.out_dir = (root_ / "eval").string();
  std::ostringstream log;
  cmd_evaluate(cfg, log);
  auto tsv = read_tsv(root_ / "eval" / "report.tsv");
  ASSERT_EQ(tsv.size(), 5u);  // header, 3 groups, Overall
  EXPECT_EQ(tsv[1][1], "25");
  EXPECT_EQ(tsv[2][1], "300");
  EXPECT_EQ(tsv[3][0], "L");
  EXPECT_EQ(tsv[4][0], "Overall");

  auto report = nlohmann::json::parse(slurp(root_ / "eval" / "report.json"));
  std::vector<GroupRow> rows;
  for (const auto& r : report["rows"]) {
    GroupRow g;
    g.exit_position = r["exit_tree"];
    g.num_queries = r["num_queries"];
    g.ndcg_full = r["ndcg_full"];
    g.ndcg_exit = r["ndcg_exit"];
    rows.push_back(g);
  }
  auto overall = aggregate_report(rows, 200, 400);
  EXPECT_EQ(overall.ndcg_exit, report["overall"]["ndcg_exit"].get<double>());
  EXPECT_EQ(overall.ndcg_full, report["overall"]["ndcg_full"].get<double>());
  EXPECT_EQ(overall.speedup, report["overall"]["speedup"].get<double>());
  EXPECT_EQ(std::stod(tsv[4][9]), overall.ndcg_exit);
}

TEST_F(CliTest, InvalidInputsWriteNothing) {
  auto cfg = generated(100, 10);
  std::ostringstream log;
  cfg.out_dir = (root_ / "none").string();
  cfg.sentinels = {50, 100};  // last sentinel must lie before L
  EXPECT_THROW(cmd_evaluate(cfg, log), std::invalid_argument);
  cfg.sentinels = {30};  // not reachable with the default grid is fine for evaluate
  cfg.test_path = (root_ / "missing.letor").string();
  EXPECT_ANY_THROW(cmd_evaluate(cfg, log));
  cfg.test_path = (root_ / "data" / "test.letor").string();
  cfg.epsilon = 0.0;
  EXPECT_THROW(cmd_classify(cfg, log), std::invalid_argument);
  cfg.epsilon = 0.01;
  cfg.num_sentinels = 10;  // only 3 grid positions before L
  EXPECT_THROW(cmd_place(cfg, log), std::invalid_argument);
  EXPECT_FALSE(fs::exists(root_ / "none"));
}

TEST_F(CliTest, ZeroIdcgPolicy) {
  std::ofstream(root_ / "m.json")
      << R"({"format": "qexit-ensemble", "version": 1, "num_features": 1, "trees": [)"
      << R"({"nodes": [{"split": {"feature": 1, "threshold": 0.5, "left": 1, "right": 2}},)"
      << R"({"leaf": 0}, {"leaf": 1}]}]})";
  std::ofstream(root_ / "d.letor") << "1 qid:a 1:1\n0 qid:a 1:0\n0 qid:b 1:1\n0 qid:b 1:0\n";
  RunConfig cfg;
  cfg.model_path = (root_ / "m.json").string();
  cfg.test_path = (root_ / "d.letor").string();
  cfg.out_dir = (root_ / "zero").string();
  std::ostringstream log;
  cmd_score(cfg, log);
  auto rows = read_tsv(root_ / "zero" / "scores.tsv");
  ASSERT_EQ(rows.size(), 3u);
  EXPECT_EQ(rows[2][2], "0");
  EXPECT_EQ(rows[2][3], "1");
  cfg.zero_idcg = ZeroIdcgPolicy::kExclude;
  cfg.out_dir = (root_ / "excl").string();
  cmd_score(cfg, log);
  EXPECT_EQ(read_tsv(root_ / "excl" / "scores.tsv").size(), 2u);
}

TEST_F(CliTest, GenIsByteIdenticalAndReparses) {
  RunConfig gen;
  gen.seed = 99;
  gen.gen_trees = 50;
  gen.gen_queries = 20;
  std::ostringstream log;
  gen.out_dir = (root_ / "a").string();
  cmd_gen(gen, log);
  gen.out_dir = (root_ / "b").string();
  cmd_gen(gen, log);
  for (const char* name : {"model.json", "test.letor", "valid.letor"}) {
    EXPECT_EQ(slurp(root_ / "a" / name), slurp(root_ / "b" / name)) << name;
  }
  auto e = read_model_file((root_ / "a" / "model.json").string(), ModelFormat::kCanonical);
  EXPECT_EQ(e.size(), 50u);
  EXPECT_EQ(read_letor_file((root_ / "a" / "test.letor").string()).groups.size(), 20u);
  EXPECT_NE(slurp(root_ / "a" / "test.letor"), slurp(root_ / "a" / "valid.letor"));
}

TEST_F(CliTest, RepeatedRunsAreByteIdentical) {
  auto cfg = generated(120, 40);
  cfg.sentinels = {20, 60};
  cfg.stride = 20;
  std::ostringstream log;
  for (const char* run : {"r1", "r2"}) {
    cfg.out_dir = (root_ / run).string();
    cfg.threads = run[1] == '1' ? 1 : 5;
    cmd_evaluate(cfg, log);
    cmd_oracle(cfg, log);
    cmd_classify(cfg, log);
    cmd_place(cfg, log);
  }
  std::size_t compared = 0;
  for (const auto& f : fs::directory_iterator(root_ / "r1")) {
    const auto name = f.path().filename();
    EXPECT_EQ(slurp(f.path()), slurp(root_ / "r2" / name)) << name;
    ++compared;
  }
  EXPECT_GE(compared, 10u);
}

TEST_F(CliTest, BinaryRunsEndToEnd) {
  auto cfg = generated(100, 20);
  const std::string cmd = fmt::format(
      "'{}' evaluate --model '{}' --test '{}' --sentinels 25,50 --threads 3 --out-dir '{}' "
      "> /dev/null",
      QEXIT_CLI_PATH, cfg.model_path, cfg.test_path, (root_ / "bin").string());
  const int status = std::system(cmd.c_str());
  ASSERT_TRUE(WIFEXITED(status));
  EXPECT_EQ(WEXITSTATUS(status), 0);
  EXPECT_TRUE(fs::exists(root_ / "bin" / "report.tsv"));
}

}  // namespace
}  // namespace qexit
