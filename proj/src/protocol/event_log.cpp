#include "rtbyz/event_log.hpp"

namespace rtbyz {

std::string_view to_string(Direction d) {
  switch (d) {
    case Direction::In: return "in";
    case Direction::Out: return "out";
    case Direction::Local: return "local";
  }
  return "?";
}

std::string_view to_string(EventKind k) {
  switch (k) {
    case EventKind::HB: return "HB";
    case EventKind::Broadcast: return "Broadcast";
    case EventKind::Echo: return "Echo";
    case EventKind::Deliver: return "Deliver";
    case EventKind::JoinHB: return "JoinHB";
    case EventKind::Join: return "Join";
    case EventKind::BroadcastStart: return "broadcast_start";
    case EventKind::Delivered: return "delivered";
    case EventKind::SelfCrash: return "self_crash";
    case EventKind::ForcedCrash: return "forced_crash";
    case EventKind::Silenced: return "silenced";
    case EventKind::Revived: return "revived";
    case EventKind::CrashDeclared: return "crash_declared";
    case EventKind::JoinRequested: return "join_requested";
    case EventKind::JoinCompleted: return "join_completed";
    case EventKind::JoinFailed: return "join_failed";
    case EventKind::LeaveRequested: return "leave_requested";
    case EventKind::Left: return "left";
    case EventKind::MembershipAdded: return "member_added";
    case EventKind::MembershipRemoved: return "member_removed";
  }
  return "?";
}

EventKind event_kind(MessageKind k) { return static_cast<EventKind>(static_cast<int>(k)); }

std::string value_id(const BroadcastPayload& p) {
  return hex(std::span<const std::uint8_t>(p.digest().data(), 8));
}

void EventLog::message(Round r, ProcessId node, Direction d, const Item& item) {
  if (!record_messages_) return;
  Event e;
  e.round = r;
  e.node = node;
  e.direction = d;
  e.kind = event_kind(kind_of(item));
  struct Visitor {
    Event& e;
    void operator()(const HeartbeatItem& hb) const {
      e.instance = {hb.origin, hb.hb_round};
      e.signer_count = static_cast<std::uint32_t>(hb.sigs.size());
    }
    void operator()(const BroadcastItem& b) const {
      e.instance = b.payload->key();
      e.signer_count = 1;
      e.detail = value_id(*b.payload);
    }
    void operator()(const EchoItem& m) const {
      e.instance = m.payload->key();
      e.signer_count = static_cast<std::uint32_t>(m.sigs.size());
      e.detail = value_id(*m.payload);
    }
    void operator()(const DeliverItem& m) const {
      e.instance = m.payload->key();
      e.signer_count = static_cast<std::uint32_t>(m.proof.size());
      e.detail = value_id(*m.payload) + "/" + std::to_string(m.witnesses.size());
    }
    void operator()(const JoinHbItem& j) const {
      e.instance = {j.request.joiner, j.request.round};
      e.signer_count = 1;
    }
    void operator()(const JoinItem& j) const {
      e.instance = {j.request.joiner, j.request.round};
      e.signer_count = static_cast<std::uint32_t>(j.sigs.size());
    }
  };
  std::visit(Visitor{e}, item);
  events_.push_back(std::move(e));
}

void EventLog::write_csv(std::ostream& out) const {
  out << kCsvHeader << '\n';
  for (const auto& e : events_) {
    out << e.round << ',' << to_index(e.node) << ',' << to_string(e.direction) << ',' << to_string(e.kind) << ','
        << to_index(e.instance.sender) << ',' << e.instance.origin_round << ',' << e.signer_count << ','
        << e.detail << '\n';
  }
}

}  // namespace rtbyz
