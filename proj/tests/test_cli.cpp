#include <gtest/gtest.h>

#include <sys/wait.h>

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

namespace fs = std::filesystem;

namespace {

struct Result {
  int code = -1;
  std::string out;
};

// Runs the CLI with stderr discarded; returns the exit code and stdout.
Result cli(const std::string& args) {
  const std::string cmd = std::string(RTBYZ_CLI) + " " + args + " 2>/dev/null";
  Result r;
  FILE* p = popen(cmd.c_str(), "r");
  if (p == nullptr) return r;
  char buf[4096];
  std::size_t got = 0;
  while ((got = fread(buf, 1, sizeof buf, p)) > 0) r.out.append(buf, got);
  const int status = pclose(p);
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return r;
}

std::string src(const std::string& rel) { return std::string(RTBYZ_SOURCE_DIR) + "/" + rel; }

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::vector<std::string> rows(const std::string& csv) {
  std::vector<std::string> out;
  std::istringstream is(csv);
  for (std::string line; std::getline(is, line);) out.push_back(line);
  return out;
}

class Cli : public ::testing::Test {
 protected:
  void SetUp() override {
    dir = fs::temp_directory_path() / ("rtbyz_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(dir);
  }
  void TearDown() override { fs::remove_all(dir); }
  std::string out(const std::string& sub) const { return (dir / sub).string(); }
  fs::path dir;
};

}  // namespace

TEST_F(Cli, LosslessBroadcastDeliversWithinThreeR) {
  const auto r = cli("run " + src("configs/scenarios/broadcast_lossless.json") + " --out " + out("a"));
  ASSERT_EQ(r.code, 0);
  std::set<std::string> delivered;
  for (const auto& line : rows(slurp(dir / "a" / "events.csv"))) {
    if (line.find(",delivered,") == std::string::npos) continue;
    const int round = std::stoi(line.substr(0, line.find(',')));
    EXPECT_LE(round, 1 + 3 * 4) << line;
    delivered.insert(line.substr(line.find(',') + 1, line.find(',', line.find(',') + 1) - line.find(',') - 1));
  }
  EXPECT_EQ(delivered, (std::set<std::string>{"0", "1", "2", "3"}));
}

TEST_F(Cli, EveryShippedScenarioPasses) {
  for (const auto& e : fs::directory_iterator(src("configs/scenarios"))) {
    const auto r = cli("run " + e.path().string() + " --out " + out("s"));
    EXPECT_EQ(r.code, 0) << e.path() << "\n" << r.out;
  }
}

TEST_F(Cli, EquivocationPassesAgreement) {
  const auto r = cli("run " + src("configs/scenarios/equivocation.json") + " --out " + out("e"));
  EXPECT_EQ(r.code, 0) << r.out;
  EXPECT_EQ(r.out.find("agreement"), std::string::npos);
}

TEST_F(Cli, ViolationExitsOne) {
  const auto r = cli("run " + src("tests/data/no_self_crash_heavy_loss.json") + " --out " + out("v"));
  EXPECT_EQ(r.code, 1);
  EXPECT_FALSE(r.out.empty());
}

TEST_F(Cli, ConfigErrorsExitTwo) {
  EXPECT_EQ(cli("run " + src("tests/data/unknown_key.json") + " --out " + out("u")).code, 2);
  EXPECT_EQ(cli("run " + out("missing.json")).code, 2);
  EXPECT_EQ(cli("").code, 2);
  EXPECT_EQ(cli("frobnicate").code, 2);
  EXPECT_EQ(cli("run " + src("configs/scenarios/broadcast_lossless.json") + " --format xml").code, 2);
  EXPECT_EQ(cli("experiment " + src("tests/data/bursty_invalid_spec.json") + " --out " + out("b")).code, 2);
  EXPECT_EQ(cli("--help").code, 0);
}

TEST_F(Cli, RunIsDeterministic) {
  const auto scenario = src("configs/scenarios/lossy_withhold.json");
  ASSERT_EQ(cli("run " + scenario + " --out " + out("a")).code, 0);
  ASSERT_EQ(cli("run " + scenario + " --out " + out("b")).code, 0);
  ASSERT_EQ(cli("run " + scenario + " --seed 99 --out " + out("c")).code, 0);
  const auto a = slurp(dir / "a" / "events.csv");
  EXPECT_GT(a.size(), 1000u);
  EXPECT_EQ(a, slurp(dir / "b" / "events.csv"));
  EXPECT_NE(a, slurp(dir / "c" / "events.csv"));
}

TEST_F(Cli, ReliabilityGridHasEightRowsAndReruns) {
  const auto spec = src("configs/specs/reliability_grid.json");
  ASSERT_EQ(cli("experiment " + spec + " --out " + out("a")).code, 0);
  ASSERT_EQ(cli("experiment " + spec + " --out " + out("b") + " --jobs 3").code, 0);
  const auto csv = slurp(dir / "a" / "reliability.csv");
  const auto lines = rows(csv);
  ASSERT_EQ(lines.size(), 9u);
  EXPECT_EQ(lines[0], "correct,model,p_loss,alpha,beta,R,reps,crashes,crash_fraction");
  for (std::size_t i = 1; i < lines.size(); ++i) EXPECT_NE(lines[i].find(",1000,"), std::string::npos) << lines[i];
  for (const char* f : {"reliability.csv", "shutdown.csv", "window.csv", "latency.csv", "bandwidth.csv"})
    EXPECT_EQ(slurp(dir / "a" / f), slurp(dir / "b" / f)) << f;
}

TEST_F(Cli, RepsOverride) {
  ASSERT_EQ(cli("experiment " + src("configs/specs/reliability_grid.json") + " --reps 50 --out " + out("a")).code, 0);
  for (const auto& line : rows(slurp(dir / "a" / "reliability.csv")))
    if (line[0] != 'c') EXPECT_NE(line.find(",50,"), std::string::npos) << line;
}
