#include <gpdyn/io.hpp>

#include <gtest/gtest.h>

#include <cstdio>
#include <filesystem>
#include <string>
#include <sys/wait.h>

namespace gpdyn {
namespace {

namespace fs = std::filesystem;

struct Result {
  int code;
  std::string out;
};

Result run(const std::string& args) {
  const std::string cmd = std::string(GPDYN_CLI_PATH) + " " + args + " 2>&1";
  FILE* pipe = popen(cmd.c_str(), "r");
  if (pipe == nullptr) throw std::runtime_error("popen failed");
  std::string out;
  char buf[512];
  while (std::fgets(buf, sizeof buf, pipe) != nullptr) out += buf;
  const int status = pclose(pipe);
  return {WIFEXITED(status) ? WEXITSTATUS(status) : -1, out};
}

class Cli : public ::testing::Test {
 protected:
  void SetUp() override {
    dir = fs::temp_directory_path() / ("gpdyn_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(dir);
    fs::create_directories(dir);
  }
  void TearDown() override { fs::remove_all(dir); }
  std::string p(const std::string& name) const { return (dir / name).string(); }
  static constexpr const char* kShort = " --burn 30 --samples 30 --thinning 2 --threads 2";
  fs::path dir;
};

TEST_F(Cli, SimulateIsSeededAndDefaultShape) {
  ASSERT_EQ(run("simulate --seed 3 --out " + p("a")).code, 0);
  ASSERT_EQ(run("simulate --seed 3 --out " + p("b")).code, 0);
  EXPECT_EQ(read_text(p("a.data.csv")), read_text(p("b.data.csv")));
  EXPECT_EQ(read_text(p("a.truth.csv")), read_text(p("b.truth.csv")));
  const Dataset d = load_time_series_csv(p("a.data.csv"));
  EXPECT_EQ(d.series.size(), 5u);
  EXPECT_EQ(d.series[0].length(), 21);
  EXPECT_EQ(d.dim(), 5);
  EXPECT_FALSE(fs::exists(p("a.perturbations.csv")));
}

TEST_F(Cli, InferIsDeterministicAcrossThreadCounts) {
  ASSERT_EQ(run("simulate --genes 3 --links 2 --series 2 --points 6 --seed 4 --out " + p("s")).code, 0);
  const std::string base = "infer --data " + p("s.data.csv") + " --eta 0.2 --chains 3 --seed 7 --burn 30 --samples 30 --thinning 2";
  ASSERT_EQ(run(base + " --threads 1 --out " + p("r1")).code, 0);
  ASSERT_EQ(run(base + " --threads 3 --out " + p("r2")).code, 0);
  EXPECT_EQ(read_text(p("r1.edges.csv")), read_text(p("r2.edges.csv")));
  const auto meta = nlohmann::json::parse(read_text(p("r1.meta.json")));
  EXPECT_EQ(meta.at("seed").get<int>(), 7);
  EXPECT_EQ(meta.at("chains").size(), 3u);
  EXPECT_DOUBLE_EQ(meta.at("eta").get<double>(), 0.2);
}

TEST_F(Cli, KnockoutFileEngagesSteadyStateBlock) {
  ASSERT_EQ(run("simulate --genes 3 --links 2 --series 2 --points 6 --knockouts G1,G3 --seed 5 --out " + p("s")).code, 0);
  ASSERT_TRUE(fs::exists(p("s.perturbations.csv")));
  ASSERT_EQ(run("infer --data " + p("s.data.csv") + " --ko " + p("s.perturbations.csv") + kShort + " --out " + p("k")).code, 0);
  ASSERT_EQ(run("infer --data " + p("s.data.csv") + kShort + " --out " + p("n")).code, 0);
  const auto with = nlohmann::json::parse(read_text(p("k.meta.json")));
  const auto without = nlohmann::json::parse(read_text(p("n.meta.json")));
  EXPECT_TRUE(with.at("chains")[0].at("acceptance").contains("steady_state"));
  EXPECT_FALSE(without.at("chains")[0].at("acceptance").contains("steady_state"));
}

TEST_F(Cli, ConfigFileWithFlagOverride) {
  ASSERT_EQ(run("simulate --genes 3 --links 2 --series 2 --points 6 --seed 6 --out " + p("s")).code, 0);
  write_text(p("cfg.json"), R"({"n_burn": 12, "n_samples": 9, "thinning": 1, "refinement": 2})");
  ASSERT_EQ(run("infer --data " + p("s.data.csv") + " --config " + p("cfg.json") + " --samples 5 --threads 1 --out " + p("c")).code, 0);
  const auto cfg = nlohmann::json::parse(read_text(p("c.meta.json"))).at("config");
  EXPECT_EQ(cfg.dump().find("\"n_samples\":5") != std::string::npos, true) << cfg.dump();
  EXPECT_EQ(cfg.dump().find("\"n_burn\":12") != std::string::npos, true);
  EXPECT_EQ(cfg.dump().find("\"refinement\":2") != std::string::npos, true);
}

TEST_F(Cli, ErrorExitCodes) {
  const Result missing = run("infer --data " + p("nope.csv") + " --out " + p("x"));
  EXPECT_EQ(missing.code, 1);
  EXPECT_NE(missing.out.find("nope.csv"), std::string::npos) << missing.out;
  EXPECT_EQ(run("infer --data " + p("nope.csv") + " --bogus-flag").code, 2);
  EXPECT_EQ(run("").code, 2);
  EXPECT_EQ(run("simulate --kind cubic --out " + p("z")).code, 2);
  EXPECT_EQ(run("infer --help").code, 0);
}

TEST_F(Cli, EvaluatePerfectPredictionAndSelfLoops) {
  write_text(p("truth.csv"), "from,to\nA,B\nB,C\n");
  write_text(p("pred.csv"),
             "from,to,confidence,self_loop\n"
             "A,A,1,1\nA,B,0.9,0\nB,C,0.8,0\nC,C,0.99,1\nB,A,0.1,0\nC,A,0.2,0\nA,C,0.3,0\nC,B,0.05,0\nB,B,0.7,1\n");
  const Result r = run("evaluate --pred " + p("pred.csv") + " --truth " + p("truth.csv") + " --plot-data " + p("plot"));
  ASSERT_EQ(r.code, 0) << r.out;
  EXPECT_NE(r.out.find("AUROC 1.000000"), std::string::npos) << r.out;
  EXPECT_NE(r.out.find("AUPR 1.000000"), std::string::npos) << r.out;
  EXPECT_TRUE(fs::exists(p("plot.roc.csv")));
  EXPECT_TRUE(fs::exists(p("plot.pr.csv")));
}

TEST_F(Cli, EvaluateShapeMismatchFails) {
  write_text(p("truth.csv"), "from,to\nA,D\n");
  write_text(p("pred.csv"), "from,to,confidence,self_loop\nA,B,0.9,0\nB,A,0.1,0\n");
  EXPECT_EQ(run("evaluate --pred " + p("pred.csv") + " --truth " + p("truth.csv")).code, 1);
}

TEST_F(Cli, DiagnoseWritesReports) {
  ASSERT_EQ(run("simulate --genes 3 --links 2 --series 2 --points 6 --seed 8 --out " + p("s")).code, 0);
  ASSERT_EQ(run("diagnose --data " + p("s.data.csv") + " --chains 2" + kShort + " --out " + p("d")).code, 0);
  const auto diag = nlohmann::json::parse(read_text(p("d.diagnostics.json")));
  EXPECT_TRUE(diag.dump().find("max_link_disagreement") != std::string::npos);
  EXPECT_EQ(read_text(p("d.trace.csv")).rfind("chain,collected,from,to,cumulative_mean", 0), 0u);
}

}  // namespace
}  // namespace gpdyn
