#pragma once

#include <map>
#include <optional>
#include <set>
#include <vector>

#include "rtbyz/core.hpp"
#include "rtbyz/crypto.hpp"
#include "rtbyz/message.hpp"

namespace rtbyz {

/// Per-node list of the latest proven activity round of every process.
class LastSeenLedger {
 public:
  struct Stamp {
    Round round = 0;
    Signature proof{};
  };

  /// Keeps the entry if it is newer than the current one. Caller has verified
  /// the proof. Returns true when the ledger changed.
  bool observe(ProcessId id, Round stamp, const Signature& proof);
  std::optional<Round> stamp(ProcessId id) const;
  std::size_t size() const { return stamps_.size(); }
  const std::map<ProcessId, Stamp>& stamps() const { return stamps_; }

  /// Entries with stamp >= not_before, in id order.
  std::vector<LedgerEntry> entries(Round not_before) const;
  void prune(Round before);
  void forget(ProcessId id) { stamps_.erase(id); }

 private:
  std::map<ProcessId, Stamp> stamps_;
};

bool verify_ledger_entry(const KeyRegistry& keys, const LedgerEntry& e);

/// Pointwise maximum over entries whose proof verifies; invalid entries are dropped.
LastSeenLedger merge_ledgers(const LastSeenLedger& local, const std::vector<LedgerEntry>& inbound,
                             const KeyRegistry& keys);

/// In-place merge. Only entries newer than the local stamp are verified.
/// Returns the accepted inbound entries (valid ones, newer or not).
std::vector<LedgerEntry> merge_into(LastSeenLedger& local, const std::vector<LedgerEntry>& inbound,
                                    const KeyRegistry& keys);

/// Tracks the latest ledger received from each peer and applies the
/// staleness rule.
class CrashDetector {
 public:
  void record(ProcessId sender, Round received, const std::vector<LedgerEntry>& valid_entries);

  /// Candidates that at least `threshold` recently received ledgers consider
  /// stale. A ledger received at round t counts when t >= r - R, and stamps p
  /// stale when its entry for p is missing or below t - R.
  std::vector<ProcessId> detect(Round r, Round R, std::size_t threshold,
                                const std::vector<ProcessId>& candidates) const;

  void forget(ProcessId p);

 private:
  struct Received {
    Round round = 0;
    std::map<ProcessId, Round> stamps;
  };
  std::map<ProcessId, Received> latest_;
};

struct TrustedPool {
  std::vector<ProcessId> members;

  bool contains(ProcessId p) const;
  std::uint32_t byz_bound() const { return members.empty() ? 0 : static_cast<std::uint32_t>((members.size() - 1) / 3); }
  /// Signatures a pool member needs before forwarding a Join.
  std::uint32_t forward_threshold() const { return byz_bound() + 1; }
  /// Pool signatures a joiner needs before turning Alive.
  std::uint32_t joiner_threshold() const { return 2 * byz_bound() + 1; }
  void validate() const;
};

}  // namespace rtbyz
