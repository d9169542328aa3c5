#pragma once

#include <cstddef>
#include <memory>
#include <optional>
#include <string_view>
#include <variant>
#include <vector>

#include "rtbyz/core.hpp"
#include "rtbyz/signature_set.hpp"

namespace rtbyz {

enum class MessageKind { HB, Broadcast, Echo, Deliver, JoinHB, Join };

std::string_view to_string(MessageKind k);

/// Heartbeat of `origin` for round `hb_round` with the signatures aggregated
/// so far over hb_digest(origin, hb_round).
struct HeartbeatItem {
  ProcessId origin{};
  Round hb_round = 0;
  SignatureSet sigs;
};

struct BroadcastItem {
  PayloadPtr payload;
  Signature origin_sig{};
};

struct EchoItem {
  PayloadPtr payload;
  Signature origin_sig{};
  SignatureSet sigs;  // echoers' aggregate over the payload digest
};

struct DeliverItem {
  PayloadPtr payload;
  SignatureSet proof;      // over the payload digest, at least a quorum
  SignatureSet witnesses;  // over deliver_digest(payload)
};

struct JoinRequest {
  ProcessId joiner{};
  Bytes key;
  Round round = 0;
  bool operator==(const JoinRequest&) const = default;
};

struct JoinHbItem {
  JoinRequest request;
  Signature joiner_sig{};  // over join_hb_digest(request)
};

struct JoinItem {
  JoinRequest request;
  Signature joiner_sig{};
  std::uint32_t n = 0;
  std::vector<ProcessId> ids;
  SignatureSet sigs;  // pool members over join_digest(request, n, ids)
};

using Item = std::variant<HeartbeatItem, BroadcastItem, EchoItem, DeliverItem, JoinHbItem, JoinItem>;

MessageKind kind_of(const Item& item);

/// Last-seen entry: `id` was alive at `stamp`, proven by its own heartbeat
/// signature over hb_digest(id, stamp).
struct LedgerEntry {
  ProcessId id{};
  Round stamp = 0;
  Signature proof{};
  bool operator==(const LedgerEntry&) const = default;
};

/// Everything one process sends to one destination in one round. Loss applies
/// to the bundle as a whole.
struct Bundle {
  ProcessId sender{};
  Round round = 0;
  std::vector<Item> items;
  std::vector<LedgerEntry> ledger;
  /// Own heartbeat rides on another message instead of travelling alone.
  bool piggyback = false;
};

using BundlePtr = std::shared_ptr<const Bundle>;

struct Outbound {
  std::vector<ProcessId> to;
  BundlePtr bundle;
};

using Outbox = std::vector<Outbound>;

// Canonical sizes used for bandwidth accounting.
inline constexpr std::size_t kHeaderBytes = 24;
inline constexpr std::size_t kSigEntryBytes = 64 + 33;
inline constexpr std::size_t kLedgerEntryBytes = 8 + 8 + 64;

std::size_t payload_bytes(const BroadcastPayload& p);
std::size_t wire_bytes(const Item& item, bool piggybacked_hb);
std::size_t wire_bytes(const Bundle& bundle);

Digest hb_digest(ProcessId origin, Round hb_round);
Digest deliver_digest(const Digest& payload_digest);
Digest join_hb_digest(const JoinRequest& req);
Digest join_digest(const JoinRequest& req, std::uint32_t n, const std::vector<ProcessId>& ids);

// Control payloads for membership changes travel as ordinary broadcasts.
Bytes make_join_value(const Bytes& key);
Bytes make_leave_value();
bool is_join_value(const Bytes& value);
bool is_leave_value(const Bytes& value);
std::optional<Bytes> join_key_of(const Bytes& value);

}  // namespace rtbyz
