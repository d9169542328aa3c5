#pragma once

#include <cstddef>
#include <vector>

#include "rtbyz/core.hpp"

namespace rtbyz {

struct SigEntry {
  ProcessId signer{};
  Signature sig{};
  bool operator==(const SigEntry&) const = default;
};

/// Set of signatures over one digest, at most one entry per signer.
/// Entries are kept sorted by signer. When two different byte strings exist for
/// the same signer the lexicographically smaller one is kept, which makes union
/// commutative even for randomized signature schemes.
class SignatureSet {
 public:
  SignatureSet() = default;

  std::size_t size() const { return entries_.size(); }
  bool empty() const { return entries_.empty(); }
  const std::vector<SigEntry>& entries() const { return entries_; }
  auto begin() const { return entries_.begin(); }
  auto end() const { return entries_.end(); }

  bool contains(ProcessId signer) const;
  const SigEntry* find(ProcessId signer) const;

  /// Returns true when the set changed.
  bool insert(ProcessId signer, const Signature& sig);
  bool insert(const SigEntry& e) { return insert(e.signer, e.sig); }

  /// Returns the number of signers added.
  std::size_t merge(const SignatureSet& other);

  void erase(ProcessId signer);

  /// Number of signers, not counting `excluded` if present.
  std::size_t count_excluding(ProcessId excluded) const;

  /// Keeps the first `count` entries (by signer id).
  SignatureSet truncated(std::size_t count) const;

  std::vector<ProcessId> signers() const;

  bool operator==(const SignatureSet&) const = default;

 private:
  std::vector<SigEntry> entries_;
};

SignatureSet set_union(const SignatureSet& a, const SignatureSet& b);

}  // namespace rtbyz
