#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <sys/wait.h>

#include <gtest/gtest.h>

#include "singlq/io.hpp"
#include "singlq/tracking_example.hpp"

namespace fs = std::filesystem;

namespace singlq {
namespace {

struct CliRun {
  int code = -1;
  std::string out;
};

CliRun run(const std::string& args) {
  const std::string cmd = std::string(SINGLQ_CLI_PATH) + " " + args + " 2>&1";
  CliRun r;
  FILE* pipe = popen(cmd.c_str(), "r");
  char buf[4096];
  while (std::fgets(buf, sizeof buf, pipe)) r.out += buf;
  const int status = pclose(pipe);
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return r;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

class CliTest : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("singlq_cli_" + std::to_string(::getpid()) + "_" +
            ::testing::UnitTest::GetInstance()->current_test_info()->name());
    fs::remove_all(dir_);
    fs::create_directories(dir_);
    ProblemFile pf;
    pf.mode = ProblemFile::Mode::kOocp;
    pf.oocp = tracking_oocp();
    write("tracking.json", problem_to_json(pf));
  }
  void TearDown() override { fs::remove_all(dir_); }

  std::string write(const std::string& name, const Json& j) {
    std::ofstream(dir_ / name) << j.dump(2);
    return (dir_ / name).string();
  }
  std::string path(const std::string& name) const { return (dir_ / name).string(); }

  fs::path dir_;
};

TEST_F(CliTest, ValidatePasses) {
  const CliRun r = run("validate " + path("tracking.json"));
  EXPECT_EQ(r.code, 0) << r.out;
  EXPECT_NE(r.out.find("A7  pass"), std::string::npos);
  const CliRun j = run("--json validate " + path("tracking.json"));
  EXPECT_EQ(Json::parse(j.out)["all_pass"], true);
}

TEST_F(CliTest, ValidateFailures) {
  Json j = Json::parse(slurp(path("tracking.json")));
  j["matrices"]["D"][0][1] = 1.0;
  CliRun r = run("validate " + write("asym.json", j));
  EXPECT_EQ(r.code, 4);
  EXPECT_NE(r.out.find("matrices.D"), std::string::npos);

  j = Json::parse(slurp(path("tracking.json")));
  j["mode"] = "raw";
  j["matrices"].erase("H");
  j["matrices"]["B"] = {{0.0}, {0.0}};
  r = run("validate " + write("rank.json", j));
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.out.find("A1  FAIL"), std::string::npos);
  EXPECT_NE(r.out.find("rank(B) = 0"), std::string::npos);

  EXPECT_EQ(run("validate " + path("missing.json")).code, 4);
}

TEST_F(CliTest, SolveWritesDeterministicBundle) {
  CliRun r = run("solve " + path("tracking.json") + " --epsilon 0.1 --out " + path("a.json"));
  ASSERT_EQ(r.code, 0) << r.out;
  EXPECT_NE(r.out.find("Jbar    = 21.656854249"), std::string::npos);
  r = run("solve " + path("tracking.json") + " --epsilon 0.1 --out " + path("b.json"));
  EXPECT_EQ(slurp(path("a.json")), slurp(path("b.json")));
  const Json b = Json::parse(slurp(path("a.json")));
  EXPECT_NEAR(b["cheap"]["P1"][0][0].get<double>(), b["cheap"]["P"][0][0].get<double>(), 0.0);
}

TEST_F(CliTest, SolveZeroProblem) {
  Json j = Json::parse(slurp(path("tracking.json")));
  j["disturbance"] = Json::array();
  j["initial_state"] = {0.0, 0.0};
  const CliRun r = run("--json solve " + write("zero.json", j) + " --epsilon 0.1");
  ASSERT_EQ(r.code, 0) << r.out;
  const Json b = Json::parse(r.out);
  EXPECT_EQ(b["cheap"]["Jstar"].get<double>(), 0.0);
  EXPECT_EQ(b["reduced"]["Jbar"].get<double>(), 0.0);
}

TEST_F(CliTest, SweepUsageAndOutputs) {
  EXPECT_EQ(run("sweep " + path("tracking.json") + " --epsilons 0.1").code, 1);
  const CliRun r = run("sweep " + path("tracking.json") + " --epsilons 0.2,0.1 --out " +
                    path("sw"));
  ASSERT_EQ(r.code, 0) << r.out;
  const Json rep = Json::parse(slurp(dir_ / "sw" / "sweep.json"));
  ASSERT_EQ(rep["entries"].size(), 2u);
  EXPECT_GT(rep["entries"][0]["J_u1"].get<double>(), rep["entries"][1]["J_u1"].get<double>());
  EXPECT_TRUE(fs::exists(dir_ / "sw" / "traj_eps_0.1.csv"));
  EXPECT_TRUE(fs::exists(dir_ / "sw" / "plot.py"));
  EXPECT_EQ(slurp(dir_ / "sw" / "sweep.csv").substr(0, 16), "epsilon,status,J");
}

TEST_F(CliTest, ExampleTracking) {
  const CliRun r = run("example-tracking --out " + path("ex"));
  ASSERT_EQ(r.code, 0) << r.out;
  const Json s = Json::parse(slurp(dir_ / "ex" / "summary.json"));
  EXPECT_NEAR(s["Jbar"].get<double>(), 16.0 + 4.0 * std::sqrt(2.0), 1e-9);
  EXPECT_NEAR(s["h20_0"].get<double>(), 8.0 - 4.0 * std::sqrt(2.0), 1e-9);
  for (const char* e : {"0.2", "0.1", "0.05", "0.025"}) {
    const fs::path csv = dir_ / "ex" / (std::string("traj_eps_") + e + ".csv");
    ASSERT_TRUE(fs::exists(csv)) << csv;
    std::ifstream in(csv);
    std::string line, last;
    while (std::getline(in, line)) last = line;
    std::stringstream ls(last);
    std::string t, x, y;
    std::getline(ls, t, ',');
    std::getline(ls, x, ',');
    std::getline(ls, y, ',');
    EXPECT_LT(std::abs(std::stod(x)), 1e-4);
    EXPECT_LT(std::abs(std::stod(y)), 1e-4);
  }
  const Json p = Json::parse(slurp(dir_ / "ex" / "problem.json"));
  EXPECT_EQ(p["mode"], "oocp");
}

}  // namespace
}  // namespace singlq
