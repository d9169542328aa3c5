#include "rtbyz/monitors.hpp"

#include <algorithm>
#include <map>
#include <sstream>

namespace rtbyz {

namespace {

std::string who(ProcessId p) { return "p" + std::to_string(to_index(p)); }

}  // namespace

std::vector<Violation> check_properties(const MonitorInput& in) {
  std::vector<Violation> out;
  const auto& events = *in.events;
  const Round obligation_end = in.horizon - (3 * in.R + 2);

  std::set<ProcessId> faulty = in.byzantine;
  std::map<ProcessId, Round> joined_at;  // joiners only
  std::map<InstanceKey, std::pair<Round, std::string>> broadcasts;
  std::map<std::pair<ProcessId, InstanceKey>, std::vector<std::pair<Round, std::string>>> delivered;

  for (const auto& e : events) {
    switch (e.kind) {
      case EventKind::SelfCrash:
      case EventKind::ForcedCrash:
      case EventKind::Silenced:
      case EventKind::Left:
        faulty.insert(e.node);
        break;
      case EventKind::JoinRequested:
        if (!joined_at.contains(e.node)) joined_at[e.node] = -1;
        break;
      case EventKind::JoinCompleted:
        joined_at[e.node] = e.round;
        break;
      case EventKind::BroadcastStart:
        broadcasts.emplace(e.instance, std::make_pair(e.round, e.detail));
        break;
      case EventKind::Delivered:
        delivered[{e.node, e.instance}].emplace_back(e.round, e.detail);
        break;
      default:
        break;
    }
  }

  std::vector<ProcessId> correct;
  for (auto p : in.nodes) {
    if (faulty.contains(p)) continue;
    auto j = joined_at.find(p);
    if (j != joined_at.end() && j->second < 0) continue;  // never got in
    correct.push_back(p);
  }
  const auto present_for = [&](ProcessId p, const InstanceKey& key) {
    auto j = joined_at.find(p);
    return j == joined_at.end() || j->second < key.origin_round;
  };
  const auto is_correct = [&](ProcessId p) { return std::find(correct.begin(), correct.end(), p) != correct.end(); };

  // No-duplication holds for every honest process, crashed or not.
  for (const auto& [k, ds] : delivered) {
    if (in.byzantine.contains(k.first)) continue;
    if (ds.size() > 1)
      out.push_back({"no-duplication", who(k.first) + " delivered " + to_string(k.second) + " " +
                                           std::to_string(ds.size()) + " times"});
  }

  // Integrity.
  for (const auto& [k, ds] : delivered) {
    const auto& [p, key] = k;
    if (!is_correct(p) || in.byzantine.contains(key.sender)) continue;
    auto b = broadcasts.find(key);
    for (const auto& [round, value] : ds)
      if (b == broadcasts.end() || b->second.second != value)
        out.push_back({"integrity", who(p) + " delivered " + value + " for " + to_string(key) +
                                        " which its sender never broadcast"});
  }

  // Validity and timeliness for broadcasts by correct originators.
  for (const auto& [key, b] : broadcasts) {
    if (!is_correct(key.sender)) continue;
    const auto& [start, value] = b;
    bool someone = false;
    for (auto p : correct) {
      auto d = delivered.find({p, key});
      if (d == delivered.end()) continue;
      for (const auto& [round, v] : d->second) {
        if (v == value) someone = true;
        if (round > start + 3 * in.R)
          out.push_back({"timeliness", who(p) + " delivered " + to_string(key) + " at round " + std::to_string(round) +
                                           ", bound " + std::to_string(start + 3 * in.R)});
      }
    }
    if (!someone && start <= obligation_end)
      out.push_back({"validity", "no correct process delivered " + to_string(key)});
  }

  // Agreement: one value per instance, and every correct process present for
  // the instance delivers it.
  std::map<InstanceKey, std::map<std::string, std::pair<Round, ProcessId>>> values;
  for (const auto& [k, ds] : delivered) {
    if (!is_correct(k.first)) continue;
    for (const auto& [round, v] : ds) {
      auto& slot = values[k.second];
      auto it = slot.find(v);
      if (it == slot.end() || round < it->second.first) slot[v] = {round, k.first};
    }
  }
  for (const auto& [key, vs] : values) {
    if (vs.size() > 1) {
      out.push_back({"agreement", "correct processes delivered " + std::to_string(vs.size()) + " values for " +
                                      to_string(key)});
      continue;
    }
    const auto& [value, first] = *vs.begin();
    if (first.first > obligation_end) continue;
    for (auto p : correct) {
      if (!present_for(p, key)) continue;
      if (!delivered.contains({p, key}))
        out.push_back({"agreement", who(p) + " never delivered " + to_string(key) + " (" + value + ") delivered by " +
                                        who(first.second) + " at round " + std::to_string(first.first)});
    }
  }
  return out;
}

std::string describe(const std::vector<Violation>& v) {
  std::ostringstream os;
  for (const auto& x : v) os << x.property << ": " << x.what << '\n';
  return os.str();
}

}  // namespace rtbyz
