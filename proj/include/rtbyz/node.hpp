#pragma once

#include <map>
#include <memory>
#include <optional>
#include <set>
#include <vector>

#include "rtbyz/core.hpp"
#include "rtbyz/crypto.hpp"
#include "rtbyz/event_log.hpp"
#include "rtbyz/membership.hpp"
#include "rtbyz/message.hpp"
#include "rtbyz/rng.hpp"
#include "rtbyz/signature_set.hpp"

namespace rtbyz {

enum class LifeCycle { Alive, Dead, Pending };

enum class CrashCase { Heartbeat, EchoQuorum, DeliverQuorum, Silence, Unechoed };

std::string_view to_string(LifeCycle s);
std::string_view to_string(CrashCase c);

class Node;

/// Anything the world can drive round by round.
class Process {
 public:
  virtual ~Process() = default;
  virtual ProcessId id() const = 0;
  virtual bool byzantine() const { return false; }
  virtual void emit(Round r, Outbox& out) = 0;
  virtual void receive(const Bundle& bundle, Round r) = 0;
  virtual void end_round(Round r) = 0;
  /// The honest state machine behind this process, if any.
  virtual Node* as_node() { return nullptr; }
};

struct NodeConfig {
  SystemParams params;
  std::vector<ProcessId> members;  // initial membership, self included
  TrustedPool pool;
  bool self_crash = true;
  bool revival = true;
  bool crash_detection = false;
  std::uint64_t seed = 0;
};

/// Per-instance bookkeeping. Echo tracking, delivery tracking and the
/// per-echoer store live side by side.
struct InstanceState {
  struct ValueState {
    PayloadPtr payload;
    std::optional<Signature> origin_sig;
    SignatureSet sigs;  // verified signatures over the payload digest, all echoers
  };

  std::map<Digest, ValueState> values;
  /// (echoer) -> value digest -> signers reported by that echoer.
  std::map<ProcessId, std::map<Digest, std::vector<ProcessId>>> msg_store;

  bool own = false;          // this node is the originator
  bool join = false;         // membership join broadcast: originator never counts
  bool echoing = false;
  bool echo_stopped = false;  // echo tracker existed and ended without delivery
  Digest echo_value{};
  Round window_start = 0;
  Round echo_until = 0;
  std::optional<std::pair<Digest, Digest>> lie;

  bool delivered = false;
  Digest delivered_value{};
  Round deliver_round = 0;
  Round send_from = 0;
  Round send_until = 0;
  SignatureSet proof;      // R_echo frozen at delivery
  SignatureSet witnesses;  // R_deliver, over deliver_digest
  bool case2_done = false;
  bool revival_used = false;
  bool seen_while_dead = false;
};

class Node : public Process {
 public:
  Node(ProcessId self, NodeConfig cfg, std::shared_ptr<const KeyRegistry> keys, EventLog* log);

  ProcessId id() const override { return self_; }
  void emit(Round r, Outbox& out) override;
  void receive(const Bundle& bundle, Round r) override;
  void end_round(Round r) override;
  Node* as_node() override { return this; }

  // Application and scenario hooks.
  /// Starts a broadcast whose first emission happens in round r.
  PayloadPtr broadcast(Round r, Bytes value);
  void request_leave(Round r);
  void force_crash(Round r);
  /// Puts the node in Pending and starts the join handshake at round r.
  void start_join(Round r, Bytes key);

  LifeCycle life() const { return life_; }
  bool left() const { return left_; }
  std::uint32_t n() const { return static_cast<std::uint32_t>(members_.size()); }
  std::uint32_t f() const { return f_; }
  std::uint32_t detected() const { return detected_; }
  std::uint32_t quorum() const;
  const std::vector<ProcessId>& members() const { return members_; }
  bool piggyback_mode() const { return piggyback_; }
  Round hb_epoch() const { return hb_epoch_; }
  Round life_epoch() const { return life_epoch_; }
  const std::map<InstanceKey, InstanceState>& instances() const { return instances_; }
  const InstanceState* instance(const InstanceKey& key) const;
  const LastSeenLedger& ledger() const { return ledger_; }
  std::optional<CrashCase> last_crash() const { return last_crash_; }
  std::size_t forwarded_heartbeats() const { return fwd_hbs_.size(); }
  /// Distinct signers on own heartbeats with hb_round in [from, to].
  std::size_t own_hb_signers(Round from, Round to) const;

  /// Signature of this node over a digest; exposed for adversary wrappers.
  Signature sign(const Digest& d) const { return signer_.sign(d); }
  const KeyRegistry& keys() const { return *keys_; }
  const NodeConfig& config() const { return cfg_; }

 private:
  struct FwdHb {
    SignatureSet sigs;
    Round until = 0;
  };

  struct JoinerState {
    JoinRequest request;
    Signature joiner_sig{};
    Round deadline = 0;
    Round retry_at = -1;
    std::map<Digest, std::pair<JoinItem, SignatureSet>> collected;
  };

  struct ServeState {
    JoinRequest request;
    Signature joiner_sig{};
    std::uint32_t n = 0;
    std::vector<ProcessId> ids;
    Digest digest{};
    SignatureSet sigs;
    Round from = 0;
    Round until = 0;
    bool forwarding = false;
  };

  bool is_member(ProcessId p) const;
  std::size_t count_for_quorum(const InstanceState& inst, const InstanceState::ValueState& vs,
                               const InstanceKey& key) const;
  /// Adds the verifying entries of `incoming` to `into`. Entries already held
  /// with identical bytes are accepted without re-verification. Signers must
  /// be members, or `extra`. Returns the valid signer ids.
  std::vector<ProcessId> merge_verified(SignatureSet& into, const SignatureSet& incoming, const Digest& digest,
                                        std::optional<ProcessId> extra = std::nullopt) const;
  bool check_origin_sig(const InstanceState* inst, const PayloadPtr& payload, const Signature& sig) const;
  bool origin_acceptable(ProcessId sender, const BroadcastPayload& p, Round r) const;
  InstanceState::ValueState& value_slot(InstanceState& inst, const PayloadPtr& payload);
  void note_origin_signed(InstanceState& inst, const PayloadPtr& payload, const Signature& sig, Round r);
  void start_echo(InstanceState& inst, const PayloadPtr& payload, Round r);
  void deliver(const InstanceKey& key, InstanceState& inst, const Digest& value, Round r, bool via_revival);
  void note_echoed_me(Round r, const std::vector<ProcessId>& signers);
  void note_heard(ProcessId p, Round r);

  bool handle_heartbeat(ProcessId sender, const HeartbeatItem& hb, Round r, bool need_validity);
  void log_local(Round r, EventKind kind, InstanceKey key = {}, std::uint32_t count = 0, std::string detail = {});
  bool handle_broadcast(ProcessId sender, const BroadcastItem& b, Round r);
  bool handle_echo(ProcessId sender, const EchoItem& e, Round r);
  bool handle_deliver(ProcessId sender, const DeliverItem& d, Round r);
  void handle_join_hb(const JoinHbItem& j, Round r);
  void handle_join(const JoinItem& j, Round r);
  void handle_ledger(ProcessId sender, const std::vector<LedgerEntry>& entries, Round r);

  std::optional<CrashCase> crash_condition(Round r) const;
  void crash(Round r, EventKind kind, std::optional<CrashCase> c);
  void try_revive(Round r);
  void detect_crashes(Round r);
  void enter_alive(Round r);
  void apply_membership_delivery(const BroadcastPayload& p, Round r);
  void remove_member(ProcessId p, Round r, EventKind kind);
  void joiner_tick(Round r);
  void emit_join_traffic(Round r, Outbox& out);
  void prune(Round r);

  ProcessId self_;
  NodeConfig cfg_;
  std::shared_ptr<const KeyRegistry> keys_;
  Signer signer_;
  EventLog* log_;
  SplitMix rng_;

  LifeCycle life_ = LifeCycle::Alive;
  bool left_ = false;
  std::optional<CrashCase> last_crash_;
  std::vector<ProcessId> members_;  // sorted, self included once Alive
  std::set<ProcessId> excluded_;    // declared crashed or departed
  std::map<ProcessId, Round> admitted_;  // joiners, by the round this node added them
  std::uint32_t f_ = 0;
  std::uint32_t detected_ = 0;

  bool piggyback_ = false;
  Round hb_epoch_ = 0;
  Round life_epoch_ = 0;
  std::map<Round, SignatureSet> own_hbs_;
  std::map<std::pair<ProcessId, Round>, FwdHb> fwd_hbs_;
  std::map<ProcessId, Round> hb_signed_;   // signer -> latest own-heartbeat round it signed
  std::map<ProcessId, Round> last_heard_;  // sender -> latest round a valid message arrived
  std::map<ProcessId, Round> last_echoed_; // signer -> latest round it echoed something of ours

  std::map<InstanceKey, InstanceState> instances_;
  std::optional<InstanceKey> pending_leave_;

  LastSeenLedger ledger_;
  CrashDetector detector_;

  std::optional<JoinerState> joiner_;
  std::optional<ServeState> serving_;
  Bytes join_key_;
};

}  // namespace rtbyz
