#pragma once

#include <map>
#include <memory>
#include <set>
#include <string_view>
#include <vector>

#include "rtbyz/netsim.hpp"
#include "rtbyz/node.hpp"

namespace rtbyz {

enum class Strategy { None, Silent, Equivocate, Withhold, RandomNoise };

Strategy parse_strategy(std::string_view name);
std::string_view to_string(Strategy s);

struct AdversaryConfig {
  Strategy kind = Strategy::None;
  std::uint32_t count = 0;
  /// Explicit Byzantine ids; empty means the first `count` ids.
  std::vector<ProcessId> targets;
  /// Equivocate: receivers of the alternative value. Empty means a seeded
  /// random half of the peers.
  std::vector<ProcessId> split;
  /// Equivocate: also drop every Echo and Deliver item, so evidence of the
  /// lie only spreads through honest nodes.
  bool suppress_forwarding = false;
};

/// Byzantine driver around an honest node that never self-crashes. Every
/// signature it emits is its own or one it received.
class ByzantineProcess : public Process {
 public:
  ByzantineProcess(std::unique_ptr<Node> inner, AdversaryConfig cfg, std::vector<ProcessId> split,
                   std::uint64_t seed);

  ProcessId id() const override { return inner_->id(); }
  bool byzantine() const override { return true; }
  void emit(Round r, Outbox& out) override;
  void receive(const Bundle& bundle, Round r) override;
  void end_round(Round r) override;
  Node* as_node() override { return inner_.get(); }

  Strategy strategy() const { return cfg_.kind; }

 private:
  void emit_withhold(Round r, Outbox& out);
  void emit_equivocate(Round r, Outbox& out);
  void emit_noise(Round r, Outbox& out);
  /// Alternative payload for one of our own instances, signed once.
  const BroadcastItem& alternative(const BroadcastItem& b);

  std::unique_ptr<Node> inner_;
  AdversaryConfig cfg_;
  std::set<ProcessId> side_b_;
  SplitMix rng_;
  std::map<InstanceKey, BroadcastItem> alt_;
};

/// Applies strategy `cfg` to the designated processes of `world` and returns
/// their ids. At most f processes may be designated.
std::vector<ProcessId> install_adversaries(World& world, const AdversaryConfig& cfg);

/// Value an equivocating originator sends to the other side.
Bytes alternative_value(const Bytes& v);

}  // namespace rtbyz
