#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <thread>

#include <CLI11.hpp>

#include "rtbyz/experiments.hpp"
#include "rtbyz/scenario.hpp"

namespace {

constexpr int kOk = 0;
constexpr int kViolation = 1;
constexpr int kUsage = 2;

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw rtbyz::ParamError("cannot read " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

int cmd_run(const std::string& path, std::optional<std::uint64_t> seed, const std::string& out_dir) {
  rtbyz::ScenarioConfig cfg;
  try {
    cfg = rtbyz::parse_scenario(read_file(path));
    if (seed) cfg.world.seed = *seed;
  } catch (const std::exception& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kUsage;
  }
  rtbyz::ScenarioRun run;
  try {
    run = rtbyz::run_scenario(cfg);
  } catch (const rtbyz::ParamError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kUsage;
  }

  namespace fs = std::filesystem;
  std::error_code ec;
  fs::create_directories(out_dir, ec);
  std::ofstream log(fs::path(out_dir) / "events.csv", std::ios::binary | std::ios::trunc);
  if (!log) {
    std::cerr << "cannot write " << (fs::path(out_dir) / "events.csv").string() << '\n';
    return kUsage;
  }
  run.world->log().write_csv(log);

  std::size_t delivered = 0;
  std::size_t crashed = 0;
  for (const auto& e : run.world->log().events()) {
    delivered += e.kind == rtbyz::EventKind::Delivered;
    crashed += e.kind == rtbyz::EventKind::SelfCrash;
  }
  std::cerr << "rounds " << run.horizon << ", deliveries " << delivered << ", self-crashes " << crashed
            << ", violations " << run.violations.size() << '\n';
  if (!run.violations.empty()) {
    std::cout << rtbyz::describe(run.violations);
    return kViolation;
  }
  return kOk;
}

int cmd_experiment(const std::string& path, std::optional<std::uint64_t> seed, std::optional<std::uint64_t> reps,
                   unsigned jobs, const std::string& out_dir) {
  rtbyz::ExperimentSpec spec;
  try {
    spec = rtbyz::parse_experiment_spec(read_file(path));
  } catch (const std::exception& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kUsage;
  }
  if (seed) spec.seed = *seed;
  if (reps) spec.reps = *reps;
  if (jobs > 0) spec.jobs = jobs;
  try {
    rtbyz::run_experiment(spec, out_dir, [](const std::string& s) { std::cerr << s << '\n'; });
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kUsage;
  }
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Real-time Byzantine reliable broadcast simulator"};
  app.require_subcommand(1);

  std::string scenario_path;
  std::string spec_path;
  std::string out_dir = ".";
  std::string format = "csv";
  std::optional<std::uint64_t> seed;
  std::optional<std::uint64_t> reps;
  unsigned jobs = std::max(1U, std::thread::hardware_concurrency());

  auto* run = app.add_subcommand("run", "Run one scenario and check the broadcast properties");
  run->add_option("scenario", scenario_path, "Scenario JSON file")->required();
  run->add_option("--seed", seed, "Override sim.seed");
  run->add_option("--out", out_dir, "Directory for events.csv");
  run->add_option("--format", format, "Output format")->check(CLI::IsMember({"csv"}));

  auto* exp = app.add_subcommand("experiment", "Run an experiment grid and write the CSV tables");
  exp->add_option("spec", spec_path, "Experiment spec JSON file")->required();
  exp->add_option("--seed", seed, "Override the master seed");
  exp->add_option("--reps", reps, "Override the repetition count");
  exp->add_option("--out", out_dir, "Output directory");
  exp->add_option("--jobs", jobs, "Parallel workers");
  exp->add_option("--format", format, "Output format")->check(CLI::IsMember({"csv"}));

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kUsage;
  }
  if (run->parsed()) return cmd_run(scenario_path, seed, out_dir);
  return cmd_experiment(spec_path, seed, reps, jobs, out_dir);
}
