#include "rtbyz/membership.hpp"

#include <algorithm>

namespace rtbyz {

bool LastSeenLedger::observe(ProcessId id, Round stamp, const Signature& proof) {
  auto it = stamps_.find(id);
  if (it != stamps_.end() && it->second.round >= stamp) return false;
  stamps_[id] = Stamp{stamp, proof};
  return true;
}

std::optional<Round> LastSeenLedger::stamp(ProcessId id) const {
  auto it = stamps_.find(id);
  if (it == stamps_.end()) return std::nullopt;
  return it->second.round;
}

std::vector<LedgerEntry> LastSeenLedger::entries(Round not_before) const {
  std::vector<LedgerEntry> out;
  out.reserve(stamps_.size());
  for (const auto& [id, s] : stamps_)
    if (s.round >= not_before) out.push_back(LedgerEntry{id, s.round, s.proof});
  return out;
}

void LastSeenLedger::prune(Round before) {
  std::erase_if(stamps_, [before](const auto& kv) { return kv.second.round < before; });
}

bool verify_ledger_entry(const KeyRegistry& keys, const LedgerEntry& e) {
  return keys.verify(e.id, hb_digest(e.id, e.stamp), e.proof);
}

LastSeenLedger merge_ledgers(const LastSeenLedger& local, const std::vector<LedgerEntry>& inbound,
                             const KeyRegistry& keys) {
  LastSeenLedger out = local;
  merge_into(out, inbound, keys);
  return out;
}

std::vector<LedgerEntry> merge_into(LastSeenLedger& local, const std::vector<LedgerEntry>& inbound,
                                    const KeyRegistry& keys) {
  std::vector<LedgerEntry> accepted;
  accepted.reserve(inbound.size());
  for (const auto& e : inbound) {
    const auto current = local.stamp(e.id);
    // An entry that is not newer than what we hold cannot raise any stamp;
    // it only makes the sender's view look staler, which omission already allows.
    if (current && *current >= e.stamp) {
      accepted.push_back(e);
      continue;
    }
    if (!verify_ledger_entry(keys, e)) continue;
    accepted.push_back(e);
    local.observe(e.id, e.stamp, e.proof);
  }
  return accepted;
}

void CrashDetector::record(ProcessId sender, Round received, const std::vector<LedgerEntry>& valid_entries) {
  Received rec;
  rec.round = received;
  for (const auto& e : valid_entries) {
    auto& slot = rec.stamps[e.id];
    slot = std::max(slot, e.stamp);
  }
  auto it = latest_.find(sender);
  if (it != latest_.end() && it->second.round == received) {
    for (const auto& [id, st] : rec.stamps) {
      auto& slot = it->second.stamps[id];
      slot = std::max(slot, st);
    }
    return;
  }
  latest_[sender] = std::move(rec);
}

std::vector<ProcessId> CrashDetector::detect(Round r, Round R, std::size_t threshold,
                                             const std::vector<ProcessId>& candidates) const {
  std::vector<ProcessId> out;
  if (r <= R) return out;
  for (ProcessId p : candidates) {
    std::size_t stale = 0;
    for (const auto& [sender, rec] : latest_) {
      if (sender == p || rec.round < r - R) continue;
      auto it = rec.stamps.find(p);
      if (it == rec.stamps.end() || it->second < rec.round - R) ++stale;
    }
    if (stale >= threshold) out.push_back(p);
  }
  return out;
}

void CrashDetector::forget(ProcessId p) {
  latest_.erase(p);
}

bool TrustedPool::contains(ProcessId p) const {
  return std::find(members.begin(), members.end(), p) != members.end();
}

void TrustedPool::validate() const {
  if (members.size() <= 3) throw ParamError("trusted pool needs more than 3 members");
}

}  // namespace rtbyz
