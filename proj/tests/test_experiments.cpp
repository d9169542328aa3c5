#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>
#include <set>
#include <sstream>

#include "rtbyz/experiments.hpp"

using namespace rtbyz;

namespace {

// Independent Monte-Carlo of the binomial crash model: m processes, each down
// with probability p; the system is down once more than `tolerated` are.
double binomial_mc(double p, std::uint32_t m, std::uint32_t tolerated, std::uint64_t draws, std::uint64_t seed) {
  std::mt19937_64 gen(seed);
  std::bernoulli_distribution crash(p);
  std::uint64_t down = 0;
  for (std::uint64_t d = 0; d < draws; ++d) {
    std::uint32_t k = 0;
    for (std::uint32_t i = 0; i < m; ++i) k += crash(gen) ? 1 : 0;
    down += k > tolerated ? 1 : 0;
  }
  return static_cast<double>(down) / static_cast<double>(draws);
}

bool within_3sigma(double mc, double exact, std::uint64_t draws) {
  const double sigma = std::sqrt(exact * (1.0 - exact) / static_cast<double>(draws));
  return std::abs(mc - exact) <= 3.0 * sigma;
}

// Straightforward reimplementation of signature diffusion with its own RNG:
// every link is drawn every round, sets are std::set.
double oracle_crash_fraction(std::uint32_t C, double p, Round R, std::uint64_t reps, std::uint64_t seed) {
  std::mt19937_64 gen(seed);
  std::bernoulli_distribution lost(p);
  std::uint64_t crashes = 0;
  for (std::uint64_t rep = 0; rep < reps; ++rep) {
    std::vector<std::set<std::uint32_t>> known(C);
    std::vector<bool> has(C, false);
    known[0].insert(0);
    has[0] = true;
    bool complete = false;
    for (Round r = 1; r <= R && !complete; ++r) {
      const auto before = known;
      const auto sending = has;
      std::vector<std::uint32_t> fresh;
      for (std::uint32_t i = 0; i < C; ++i) {
        if (!sending[i]) continue;
        for (std::uint32_t j = 0; j < C; ++j) {
          if (i == j || lost(gen)) continue;
          known[j].insert(before[i].begin(), before[i].end());
          if (!has[j]) {
            has[j] = true;
            fresh.push_back(j);
          }
        }
      }
      for (auto j : fresh) known[j].insert(j);
      complete = true;
      for (const auto& k : known) complete &= k.size() == C;
    }
    crashes += complete ? 0 : 1;
  }
  return static_cast<double>(crashes) / static_cast<double>(reps);
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::size_t lines(const std::string& s) { return static_cast<std::size_t>(std::count(s.begin(), s.end(), '\n')); }

}  // namespace

TEST(Shutdown, Basic) {
  EXPECT_EQ(sys_shutdown_basic(0.0, 1), 0.0);
  EXPECT_EQ(sys_shutdown_basic(1.0, 1), 1.0);
  // 1 - (1-p)^3 = 3p - 3p^2 + p^3
  const double p = 1e-6;
  EXPECT_NEAR(sys_shutdown_basic(p, 1), 3 * p - 3 * p * p + p * p * p, 1e-18);
  EXPECT_NEAR(sys_shutdown_basic(p, 1), 2.999997e-6, 1e-12);
  EXPECT_THROW(sys_shutdown_basic(-0.1, 1), ParamError);
}

TEST(Shutdown, Overprovisioned) {
  EXPECT_EQ(sys_shutdown_overprovisioned(0.0, 6, 1), 0.0);
  EXPECT_EQ(sys_shutdown_overprovisioned(0.5, 6, 1), 0.8125);
  EXPECT_EQ(sys_shutdown_overprovisioned(1.0, 6, 1), 1.0);
  EXPECT_THROW(sys_shutdown_overprovisioned(0.5, 7, 1), ParamError);
  for (double p : {1e-4, 1e-2, 0.3})
    EXPECT_LT(sys_shutdown_overprovisioned(p, 6, 1), sys_shutdown_basic(p, 1)) << p;
}

TEST(Shutdown, MatchesBinomialMonteCarlo) {
  const std::uint64_t draws = 100000;
  for (std::uint32_t f : {1u, 2u}) {
    for (double p : {1e-4, 1e-2, 0.5}) {
      const double basic = sys_shutdown_basic(p, f);
      EXPECT_TRUE(within_3sigma(binomial_mc(p, 2 * f + 1, 0, draws, 31 + f), basic, draws)) << p << " f=" << f;
      const std::uint32_t n = 3 * f + 3;
      const double over = sys_shutdown_overprovisioned(p, n, f);
      EXPECT_TRUE(within_3sigma(binomial_mc(p, n - f, 1, draws, 57 + f), over, draws)) << p << " f=" << f;
    }
  }
}

TEST(Kernel, LosslessCompletesInTwoRounds) {
  KernelConfig k;
  for (std::uint32_t C : {2u, 5u, 10u, 40u}) {
    k.correct = C;
    EXPECT_EQ(completion_round(k, 3), 2) << C;
    const auto rounds = completion_rounds(k, 50, 3);
    for (Round R = 2; R <= 10; ++R) EXPECT_EQ(crash_fraction(rounds, R), 0.0);
    EXPECT_EQ(crash_fraction(rounds, 1), 1.0);
    EXPECT_EQ(estimate_R(rounds, 100).R, 2);
  }
  k.correct = 1;
  EXPECT_EQ(completion_round(k, 3), 1);
}

// Two processes: the value needs one delivery, the second signature another,
// so completion is a sum of two geometric waits and
// P(done by R) = P(Binomial(R, 1-p) >= 2).
TEST(Kernel, TwoProcessesClosedForm) {
  KernelConfig k;
  k.correct = 2;
  k.net.p_loss = 0.5;
  const std::uint64_t reps = 100000;
  const auto rounds = completion_rounds(k, reps, 8);
  for (Round R : {2, 3, 4, 6}) {
    const double q = 0.5;
    const double none = std::pow(q, R);
    const double one = R * q * std::pow(q, R - 1);
    const double exact = none + one;
    EXPECT_TRUE(within_3sigma(crash_fraction(rounds, R), exact, reps)) << R << " " << crash_fraction(rounds, R);
  }
}

TEST(Kernel, AgreesWithIndependentReimplementation) {
  const std::uint64_t reps = 20000;
  struct Cell {
    std::uint32_t C;
    double p;
    Round R;
  };
  for (auto c : {Cell{5, 0.9, 5}, Cell{5, 0.6, 5}, Cell{5, 0.6, 6}, Cell{10, 0.6, 5}, Cell{4, 0.8, 8}}) {
    KernelConfig k;
    k.correct = c.C;
    k.net.p_loss = c.p;
    const double lib = crash_fraction(completion_rounds(k, reps, 101), c.R);
    const double ora = oracle_crash_fraction(c.C, c.p, c.R, reps, 202);
    // Two independent estimates: compare their difference against its own spread.
    const double pooled = (lib + ora) / 2;
    const double sigma = std::sqrt(2 * pooled * (1 - pooled) / static_cast<double>(reps));
    EXPECT_LE(std::abs(lib - ora), 4 * sigma + 1e-12) << c.C << " " << c.p << " " << c.R << ": " << lib << " vs " << ora;
    if (c.p == 0.9) EXPECT_GT(lib, 0.95);
  }
}

TEST(Kernel, MonotoneInCorrectAndR) {
  const std::uint64_t reps = 3000;
  for (double p : {0.3, 0.6}) {
    std::vector<std::vector<double>> frac;
    for (std::uint32_t C : {5u, 10u, 20u}) {
      KernelConfig k;
      k.correct = C;
      k.net.p_loss = p;
      const auto rounds = completion_rounds(k, reps, 9);
      std::vector<double> row;
      for (Round R : {5, 6, 10}) row.push_back(crash_fraction(rounds, R));
      for (std::size_t i = 1; i < row.size(); ++i) EXPECT_LE(row[i], row[i - 1]);
      frac.push_back(row);
    }
    for (std::size_t c = 1; c < frac.size(); ++c)
      for (std::size_t r = 0; r < 3; ++r) EXPECT_LE(frac[c][r], frac[c - 1][r]) << p;
  }
}

TEST(Kernel, GilbertElliottRuns) {
  KernelConfig k;
  k.correct = 5;
  k.net.model = LossModel::GilbertElliott;
  k.net.alpha = 0.5;
  k.net.beta = 0.01;
  const auto a = completion_rounds(k, 200, 4);
  EXPECT_EQ(a, completion_rounds(k, 200, 4));
  EXPECT_EQ(a, completion_rounds(k, 200, 4, 3));
  for (auto r : a) EXPECT_GE(r, 2);
}

TEST(Kernel, ParallelMatchesSerial) {
  KernelConfig k;
  k.correct = 7;
  k.net.p_loss = 0.5;
  EXPECT_EQ(completion_rounds(k, 500, 77, 1), completion_rounds(k, 500, 77, 4));
}

TEST(EstimateR, SmallestZeroCrashWindow) {
  EXPECT_EQ(estimate_R({3, 5, 4}, 10).R, 5);
  EXPECT_TRUE(estimate_R({3, 5, 4}, 10).found);
  const auto w = estimate_R({3, 11}, 10);
  EXPECT_FALSE(w.found);
  EXPECT_EQ(w.R, 11);
}

TEST(EstimateR, ShrinksWithSize) {
  Round prev = 1000;
  for (std::uint32_t n : {10u, 40u, 100u}) {
    KernelConfig k;
    k.correct = n - max_faulty(n, 0);
    k.net.p_loss = 0.9;
    k.max_rounds = 200;
    const auto est = estimate_R(completion_rounds(k, 2000, 5), 200);
    ASSERT_TRUE(est.found);
    EXPECT_LE(est.R, prev) << n;
    prev = est.R;
  }
}

TEST(Spec, ParsesAndRejects) {
  const auto s = parse_experiment_spec(R"({"seed": 3, "reps": 10,
      "reliability": {"correct": [5], "R": [5, 6], "p_loss": [0.3],
                      "net": [{"model": "gilbert-elliott", "alpha": 0.5, "beta": 0.3, "bursty": true}]}})");
  EXPECT_EQ(s.seed, 3u);
  EXPECT_EQ(s.reliability.nets.size(), 2u);
  EXPECT_FALSE(s.window.enabled);
  EXPECT_THROW(parse_experiment_spec(R"({"reliability": {"correct": [5], "R": [5],
      "net": [{"model": "gilbert-elliott", "alpha": 0.5, "beta": 0.6, "bursty": true}]}})"),
               ParamError);
  EXPECT_THROW(parse_experiment_spec(R"({"colour": 1})"), ParamError);
  EXPECT_THROW(parse_experiment_spec(R"({"reliability": {"correct": [], "R": [5], "p_loss": [0.1]}})"), ParamError);
  EXPECT_THROW(parse_experiment_spec("{"), ParamError);
}

TEST(Bandwidth, Properties) {
  const auto lossy = run_bandwidth(10, 0.3, 6, 128, 2);
  EXPECT_GE(lossy.peak_emission_bits, lossy.peak_reception_bits);
  const auto small = run_bandwidth(4, 0.1, 6, 128, 2);
  const auto big = run_bandwidth(10, 0.1, 6, 128, 2);
  EXPECT_GT(big.peak_emission_bits, small.peak_emission_bits);
  const auto heavy = run_bandwidth(4, 0.1, 6, 1'000'000, 2);
  EXPECT_GT(heavy.peak_emission_bits, small.peak_emission_bits + 1'000'000);
  EXPECT_EQ(small.payload_bits, 128u);
}

TEST(Protocol, DeliversWithinThreeR) {
  ProtocolRunConfig cfg;
  cfg.n = 7;
  cfg.R = 5;
  cfg.net.p_loss = 0.1;
  const auto res = run_protocol_instance(cfg);
  EXPECT_TRUE(res.violations.empty()) << describe(res.violations);
  EXPECT_EQ(res.correct_deliveries, 7u);
  EXPECT_EQ(res.horizon, 1 + 8 * 5);
}

TEST(Experiment, WritesFiveTables) {
  namespace fs = std::filesystem;
  const fs::path dir = fs::temp_directory_path() / "rtbyz_exp_test";
  fs::remove_all(dir);
  ExperimentSpec s;
  s.reps = 200;
  s.reliability.enabled = true;
  s.reliability.correct = {5, 10};
  s.reliability.R = {5, 10};
  NetConfig net;
  net.p_loss = 0.3;
  s.reliability.nets = {net};
  s.shutdown.enabled = true;
  s.shutdown.p_crash = {0.01};
  s.shutdown.f = {1};
  s.shutdown.draws = 1000;
  std::vector<std::string> said;
  run_experiment(s, dir.string(), [&](const std::string& m) { said.push_back(m); });
  EXPECT_FALSE(said.empty());

  const auto rel = slurp(dir / "reliability.csv");
  EXPECT_EQ(rel.substr(0, kReliabilityHeader.size()), kReliabilityHeader);
  EXPECT_EQ(lines(rel), 5u);
  EXPECT_EQ(lines(slurp(dir / "shutdown.csv")), 2u);
  EXPECT_EQ(slurp(dir / "window.csv"), std::string(kWindowHeader) + "\n");
  EXPECT_EQ(slurp(dir / "latency.csv"), std::string(kLatencyHeader) + "\n");
  EXPECT_EQ(slurp(dir / "bandwidth.csv"), std::string(kBandwidthHeader) + "\n");

  const fs::path again = dir / "again";
  run_experiment(s, again.string());
  for (const char* f : {"reliability.csv", "shutdown.csv"}) EXPECT_EQ(slurp(dir / f), slurp(again / f)) << f;
  fs::remove_all(dir);
}

TEST(Format, SignificantDigits) {
  EXPECT_EQ(fmt_double(0.5), "0.5");
  EXPECT_EQ(fmt_double(1.0 / 3.0, 3), "0.333");
  EXPECT_EQ(fmt_double(2.999997e-6, 10), "2.999997e-06");
}
