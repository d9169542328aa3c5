#pragma once

#include <cstdint>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

#include "rtbyz/core.hpp"
#include "rtbyz/message.hpp"

namespace rtbyz {

enum class Direction { In, Out, Local };

enum class EventKind {
  // message traffic
  HB,
  Broadcast,
  Echo,
  Deliver,
  JoinHB,
  Join,
  // protocol and membership transitions
  BroadcastStart,
  Delivered,
  SelfCrash,
  ForcedCrash,
  Silenced,
  Revived,
  CrashDeclared,
  JoinRequested,
  JoinCompleted,
  JoinFailed,
  LeaveRequested,
  Left,
  MembershipAdded,
  MembershipRemoved,
};

std::string_view to_string(Direction d);
std::string_view to_string(EventKind k);
EventKind event_kind(MessageKind k);

struct Event {
  Round round = 0;
  ProcessId node{};
  Direction direction = Direction::Local;
  EventKind kind = EventKind::HB;
  InstanceKey instance{};
  std::uint32_t signer_count = 0;
  /// Value fingerprint for deliveries and broadcasts, crash case, peer id, ...
  std::string detail;
};

/// Short stable fingerprint of a payload value for logs and monitors.
std::string value_id(const BroadcastPayload& p);

class EventLog {
 public:
  explicit EventLog(bool record_messages = false) : record_messages_(record_messages) {}

  bool record_messages() const { return record_messages_; }
  void add(Event e) { events_.push_back(std::move(e)); }
  void message(Round r, ProcessId node, Direction d, const Item& item);

  const std::vector<Event>& events() const { return events_; }

  static constexpr std::string_view kCsvHeader =
      "round,node,direction,kind,origin,origin_round,signer_count,detail";
  void write_csv(std::ostream& out) const;

 private:
  bool record_messages_;
  std::vector<Event> events_;
};

}  // namespace rtbyz
