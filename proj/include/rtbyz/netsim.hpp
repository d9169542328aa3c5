#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <set>
#include <string_view>
#include <vector>

#include "rtbyz/core.hpp"
#include "rtbyz/crypto.hpp"
#include "rtbyz/event_log.hpp"
#include "rtbyz/membership.hpp"
#include "rtbyz/message.hpp"
#include "rtbyz/node.hpp"
#include "rtbyz/rng.hpp"

namespace rtbyz {

enum class LossModel { Bernoulli, GilbertElliott };

LossModel parse_loss_model(std::string_view name);
std::string_view to_string(LossModel m);

struct NetConfig {
  LossModel model = LossModel::Bernoulli;
  double p_loss = 0.0;
  double alpha = 0.5;  // bad -> good
  double beta = 0.0;   // good -> bad
  bool start_bad = false;
  /// Require the positive-correlation condition (1 - beta) > alpha.
  bool bursty = false;

  void validate() const;
};

/// Long-run fraction of rounds a GE link spends in the bad state.
double ge_stationary_loss(double alpha, double beta);

/// Probability that a bad burst lasts exactly L rounds.
double burst_length_pmf(double alpha, int L);

/// Omission process of one directed link. Each link owns its own stream, so
/// adding links never perturbs the draws of existing ones.
class LinkModel {
 public:
  LinkModel(const NetConfig& cfg, std::uint64_t seed);

  /// Brings the GE state up to round r; transitions happen at the start of
  /// every round whether or not anything is sent.
  void advance_to(Round r);
  /// One transmission attempt in the current round. True when delivered.
  bool transmit();
  bool bad() const { return bad_; }

 private:
  LossModel model_;
  double p_loss_;
  double alpha_;
  double beta_;
  bool bad_;
  Round at_ = 0;
  SplitMix rng_;
};

/// Trace of one GE link over `rounds` rounds.
struct GeSample {
  double bad_fraction = 0.0;
  /// Completed bad bursts by length; a burst still open at the end is dropped.
  std::map<int, std::uint64_t> bursts;
};

GeSample sample_ge(const NetConfig& cfg, Round rounds, std::uint64_t seed);

struct NodeMetrics {
  std::uint64_t total_sent = 0;  // bytes
  std::uint64_t total_recv = 0;
  std::uint64_t peak_sent = 0;   // bytes in one round
  std::uint64_t peak_recv = 0;
  std::uint64_t cur_sent = 0;
  std::uint64_t cur_recv = 0;
  // Same, restricted to bundles that carry broadcast traffic (piggyback mode).
  std::uint64_t peak_bcast_sent = 0;
  std::uint64_t peak_bcast_recv = 0;
  std::uint64_t cur_bcast_sent = 0;
  std::uint64_t cur_bcast_recv = 0;
  double max_round_us = 0.0;     // wall time for one node-round, if measured
};

struct WorldConfig {
  SystemParams params;
  NetConfig net;
  Backend backend = Backend::Sim;
  std::uint64_t seed = 1;
  bool self_crash = true;
  bool revival = true;
  bool crash_detection = false;
  /// Pool for joins; defaults to the first min(n, 4) ids when empty and n >= 4.
  std::vector<ProcessId> pool;
  bool record_messages = false;
  bool measure_time = false;
};

class World {
 public:
  explicit World(WorldConfig cfg);
  World(const World&) = delete;
  World& operator=(const World&) = delete;

  const WorldConfig& config() const { return cfg_; }
  Round round() const { return round_; }
  std::size_t size() const { return procs_.size(); }
  std::vector<ProcessId> ids() const;

  Process& process(ProcessId p) { return *procs_.at(to_index(p)); }
  /// Honest state machine of p (the wrapped one for Byzantine processes).
  Node& node(ProcessId p);
  const Node& node(ProcessId p) const;
  bool byzantine(ProcessId p) const;
  std::set<ProcessId> byzantine_ids() const;

  /// Swaps in a different driver for p, e.g. an adversary. The wrapper
  /// receives the honest node previously installed.
  void replace(ProcessId p, std::unique_ptr<Process> proc);
  std::unique_ptr<Node> take_node(ProcessId p);
  /// Builds the honest node p would get; used by adversary wrappers.
  std::unique_ptr<Node> make_node(ProcessId p, bool self_crash, bool revival);

  std::shared_ptr<const KeyRegistry> keys() const { return keys_; }
  EventLog& log() { return log_; }
  const EventLog& log() const { return log_; }
  const std::vector<NodeMetrics>& metrics() const { return metrics_; }

  // Scheduled actions take effect at the start of the given round.
  void schedule_broadcast(ProcessId p, Round r, Bytes value);
  void schedule_crash(ProcessId p, Round r);
  /// From round r on, nothing p emits reaches the network.
  void schedule_silence(ProcessId p, Round r);
  void schedule_leave(ProcessId p, Round r);
  /// Adds a fresh process that starts the join handshake at round r.
  ProcessId schedule_join(Round r);

  void step();
  void run_until(Round horizon);

 private:
  struct Action {
    enum class Kind { Broadcast, Crash, Silence, Leave, Join } kind;
    ProcessId who;
    Bytes value;
  };

  LinkModel& link(ProcessId from, ProcessId to);
  NodeConfig node_config(ProcessId p, bool self_crash, bool revival) const;
  void apply(Round r, const Action& a);

  WorldConfig cfg_;
  std::shared_ptr<KeyRegistry> keys_;
  EventLog log_;
  std::vector<ProcessId> initial_;
  std::vector<std::unique_ptr<Process>> procs_;
  std::vector<Node*> nodes_;
  std::vector<bool> byz_;
  std::vector<bool> silenced_;
  std::set<ProcessId> node_join_pending_;
  std::vector<std::vector<LinkModel>> links_;  // [from][to]
  std::multimap<Round, Action> schedule_;
  std::vector<NodeMetrics> metrics_;
  Round round_ = 0;
};

}  // namespace rtbyz
