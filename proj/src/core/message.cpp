#include "rtbyz/message.hpp"

#include <algorithm>

#include "rtbyz/crypto.hpp"

namespace rtbyz {

namespace {

constexpr std::string_view kJoinTag = "\x01join:";
constexpr std::string_view kLeaveTag = "\x01leave";

bool starts_with(const Bytes& v, std::string_view tag) {
  return v.size() >= tag.size() && std::equal(tag.begin(), tag.end(), v.begin());
}

void put_request(Bytes& out, const JoinRequest& req) {
  put_be64(out, to_index(req.joiner));
  put_be64(out, req.key.size());
  out.insert(out.end(), req.key.begin(), req.key.end());
  put_be64(out, static_cast<std::uint64_t>(req.round));
}

}  // namespace

std::string_view to_string(MessageKind k) {
  switch (k) {
    case MessageKind::HB: return "HB";
    case MessageKind::Broadcast: return "Broadcast";
    case MessageKind::Echo: return "Echo";
    case MessageKind::Deliver: return "Deliver";
    case MessageKind::JoinHB: return "JoinHB";
    case MessageKind::Join: return "Join";
  }
  return "?";
}

MessageKind kind_of(const Item& item) { return static_cast<MessageKind>(item.index()); }

std::size_t payload_bytes(const BroadcastPayload& p) { return 16 + p.value().size(); }

std::size_t wire_bytes(const Item& item, bool piggybacked_hb) {
  struct Visitor {
    bool piggy;
    std::size_t operator()(const HeartbeatItem& hb) const {
      return (piggy ? 0 : kHeaderBytes) + 16 + kSigEntryBytes * hb.sigs.size();
    }
    std::size_t operator()(const BroadcastItem& b) const {
      return kHeaderBytes + payload_bytes(*b.payload) + kSigEntryBytes;
    }
    std::size_t operator()(const EchoItem& e) const {
      return kHeaderBytes + payload_bytes(*e.payload) + kSigEntryBytes * (1 + e.sigs.size());
    }
    std::size_t operator()(const DeliverItem& d) const {
      return kHeaderBytes + payload_bytes(*d.payload) + kSigEntryBytes * (d.proof.size() + d.witnesses.size());
    }
    std::size_t operator()(const JoinHbItem& j) const {
      return kHeaderBytes + 24 + j.request.key.size() + kSigEntryBytes;
    }
    std::size_t operator()(const JoinItem& j) const {
      return kHeaderBytes + 24 + j.request.key.size() + 8 + 8 * j.ids.size() +
             kSigEntryBytes * (1 + j.sigs.size());
    }
  };
  return std::visit(Visitor{piggybacked_hb}, item);
}

std::size_t wire_bytes(const Bundle& bundle) {
  std::size_t total = kLedgerEntryBytes * bundle.ledger.size();
  for (const auto& item : bundle.items) {
    const auto* hb = std::get_if<HeartbeatItem>(&item);
    const bool piggy = bundle.piggyback && hb != nullptr && hb->origin == bundle.sender &&
                       hb->hb_round == bundle.round;
    total += wire_bytes(item, piggy);
  }
  return total;
}

Digest hb_digest(ProcessId origin, Round hb_round) {
  Bytes body;
  body.reserve(16);
  put_be64(body, to_index(origin));
  put_be64(body, static_cast<std::uint64_t>(hb_round));
  return tagged_digest("rtbyz.hb", body);
}

Digest deliver_digest(const Digest& payload_digest) { return tagged_digest("rtbyz.deliver", payload_digest); }

Digest join_hb_digest(const JoinRequest& req) {
  Bytes body;
  put_request(body, req);
  return tagged_digest("rtbyz.joinhb", body);
}

Digest join_digest(const JoinRequest& req, std::uint32_t n, const std::vector<ProcessId>& ids) {
  Bytes body;
  put_request(body, req);
  put_be64(body, n);
  for (auto id : ids) put_be64(body, to_index(id));
  return tagged_digest("rtbyz.join", body);
}

Bytes make_join_value(const Bytes& key) {
  Bytes v;
  v.reserve(kJoinTag.size() + key.size());
  v.insert(v.end(), kJoinTag.begin(), kJoinTag.end());
  v.insert(v.end(), key.begin(), key.end());
  return v;
}

Bytes make_leave_value() { return Bytes(kLeaveTag.begin(), kLeaveTag.end()); }

bool is_join_value(const Bytes& value) { return starts_with(value, kJoinTag); }
bool is_leave_value(const Bytes& value) { return value.size() == kLeaveTag.size() && starts_with(value, kLeaveTag); }

std::optional<Bytes> join_key_of(const Bytes& value) {
  if (!is_join_value(value)) return std::nullopt;
  return Bytes(value.begin() + static_cast<std::ptrdiff_t>(kJoinTag.size()), value.end());
}

}  // namespace rtbyz
