#pragma once

#include <cstdint>
#include <functional>
#include <ostream>
#include <string>
#include <vector>

#include "rtbyz/adversary.hpp"
#include "rtbyz/crypto.hpp"
#include "rtbyz/monitors.hpp"
#include "rtbyz/netsim.hpp"

namespace rtbyz {

// ---------------------------------------------------------------------------
// System shutdown probabilities

/// Worst case for n = 3f+1: the system stops once any of 2f+1 correct
/// processes crashes itself.
double sys_shutdown_basic(double p_crash, std::uint32_t f);

/// n = 3f+3 tolerates one correct self-crash among the n-f correct processes.
double sys_shutdown_overprovisioned(double p_crash, std::uint32_t n, std::uint32_t f);

// ---------------------------------------------------------------------------
// Signature-diffusion kernel
//
// |C| correct processes; Byzantine ones withhold everything and are left out.
// Round 1: the originator sends the value with its signature. A process that
// holds the value signs it at the end of the round it first got it, and from
// the next round on sends everything it holds to everyone. A repetition
// "crashes" at window R when some process lacks one of the |C| signatures
// after R rounds.

struct KernelConfig {
  std::uint32_t correct = 10;
  NetConfig net;
  /// Rounds simulated; a repetition that has not completed reports max_rounds+1.
  Round max_rounds = 64;
};

/// First round at whose end every correct process holds all |C| signatures.
Round completion_round(const KernelConfig& cfg, std::uint64_t seed);

/// One completion round per repetition; repetition i uses derive_seed(seed, i).
std::vector<Round> completion_rounds(const KernelConfig& cfg, std::uint64_t reps, std::uint64_t seed,
                                     unsigned jobs = 1);

std::uint64_t crash_count(const std::vector<Round>& completion, Round R);
double crash_fraction(const std::vector<Round>& completion, Round R);

struct WindowEstimate {
  Round R = 0;
  bool found = false;  // false when some repetition never completed
};

/// Smallest R, searched linearly from 1, with zero crashes over all repetitions.
WindowEstimate estimate_R(const std::vector<Round>& completion, Round max_R);

// ---------------------------------------------------------------------------
// Whole-protocol runs

struct ProtocolRunConfig {
  std::uint32_t n = 4;
  Round R = 6;
  NetConfig net;
  Strategy adversary = Strategy::None;
  /// Byzantine count; defaults to f when an adversary is set.
  std::int32_t byzantine = -1;
  /// The originator; the default picks a Byzantine process for equivocate and
  /// a correct one otherwise.
  std::int32_t originator = -1;
  std::uint32_t payload_bytes = 16;
  Backend backend = Backend::Sim;
  bool measure_time = false;
  Round horizon = 0;  // 0: broadcast round + 8R
  std::uint64_t seed = 1;
};

struct ProtocolRunResult {
  std::vector<Violation> violations;
  std::uint32_t self_crashes = 0;
  std::uint32_t correct_deliveries = 0;
  std::uint64_t peak_emission_bytes = 0;   // max over correct processes
  std::uint64_t peak_reception_bytes = 0;
  std::uint64_t peak_bcast_emission_bytes = 0;  // broadcast-carrying bundles only
  std::uint64_t peak_bcast_reception_bytes = 0;
  double d_max_us = 0.0;
  Round horizon = 0;
};

/// One broadcast in a fresh world, followed by the property monitors.
ProtocolRunResult run_protocol_instance(const ProtocolRunConfig& cfg);

struct LatencyRow {
  std::uint32_t n = 0;
  double p_loss = 0.0;
  Round R = 0;
  double d_max_us = 0.0;
  double total_ms = 0.0;  // 3 * R * d_max
};

LatencyRow run_latency(std::uint32_t n, double p_loss, Round R, Backend backend, std::uint64_t seed);

struct BandwidthRow {
  std::uint32_t n = 0;
  double p_loss = 0.0;
  std::uint32_t payload_bits = 0;
  Round R = 0;
  std::uint64_t peak_emission_bits = 0;
  std::uint64_t peak_reception_bits = 0;
};

/// Peak per-round bits sent and received by a correct process with all f
/// Byzantine processes withholding signatures.
BandwidthRow run_bandwidth(std::uint32_t n, double p_loss, Round R, std::uint32_t payload_bits, std::uint64_t seed);

// ---------------------------------------------------------------------------
// Experiment specification and CSV output

struct ExperimentSpec {
  std::uint64_t seed = 1;
  std::uint64_t reps = 10000;
  unsigned jobs = 1;

  struct Reliability {
    bool enabled = false;
    std::vector<std::uint32_t> correct;
    std::vector<Round> R;
    std::vector<NetConfig> nets;
  } reliability;

  struct Shutdown {
    bool enabled = false;
    std::vector<double> p_crash;
    std::vector<std::uint32_t> f;
    std::uint64_t draws = 100000;
  } shutdown;

  struct Window {
    bool enabled = false;
    std::vector<std::uint32_t> nodes;
    std::vector<NetConfig> nets;
    std::uint64_t reps = 0;  // 0: spec reps
    Round max_R = 200;
  } window;

  struct Latency {
    bool enabled = false;
    std::vector<std::uint32_t> nodes;
    std::vector<double> p_loss;
    std::uint64_t reps = 0;  // for the window estimate; 0: spec reps
    Backend backend = Backend::EcdsaP256;
  } latency;

  struct Bandwidth {
    bool enabled = false;
    std::vector<std::uint32_t> nodes;
    std::vector<double> p_loss;
    std::vector<std::uint32_t> payload_bits{128};
    Round R = 10;
  } bandwidth;
};

/// Parses the JSON form; unknown keys and invalid values throw ParamError.
ExperimentSpec parse_experiment_spec(const std::string& json_text);

using Progress = std::function<void(const std::string&)>;

/// Runs every enabled section and writes reliability.csv, shutdown.csv,
/// window.csv, latency.csv and bandwidth.csv into out_dir. Disabled sections
/// produce a header-only file.
void run_experiment(const ExperimentSpec& spec, const std::string& out_dir, const Progress& progress = {});

inline constexpr std::string_view kReliabilityHeader =
    "correct,model,p_loss,alpha,beta,R,reps,crashes,crash_fraction";
inline constexpr std::string_view kShutdownHeader =
    "p_crash,f,n_basic,basic,mc_basic,n_over,overprovisioned,mc_over,draws";
inline constexpr std::string_view kWindowHeader = "nodes,correct,model,p_loss,alpha,beta,reps,R,found";
inline constexpr std::string_view kLatencyHeader = "nodes,p_loss,R,d_max_us,total_ms";
inline constexpr std::string_view kBandwidthHeader =
    "nodes,p_loss,payload_bits,R,peak_emission_bits,peak_reception_bits";

/// printf %g with `digits` significant digits; used by every CSV writer.
std::string fmt_double(double v, int digits = 6);

}  // namespace rtbyz
