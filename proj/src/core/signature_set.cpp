#include "rtbyz/signature_set.hpp"

#include <algorithm>

namespace rtbyz {

namespace {

auto lower(std::vector<SigEntry>& v, ProcessId signer) {
  return std::lower_bound(v.begin(), v.end(), signer,
                          [](const SigEntry& e, ProcessId s) { return e.signer < s; });
}

auto lower(const std::vector<SigEntry>& v, ProcessId signer) {
  return std::lower_bound(v.begin(), v.end(), signer,
                          [](const SigEntry& e, ProcessId s) { return e.signer < s; });
}

}  // namespace

bool SignatureSet::contains(ProcessId signer) const { return find(signer) != nullptr; }

const SigEntry* SignatureSet::find(ProcessId signer) const {
  auto it = lower(entries_, signer);
  if (it == entries_.end() || it->signer != signer) return nullptr;
  return &*it;
}

bool SignatureSet::insert(ProcessId signer, const Signature& sig) {
  auto it = lower(entries_, signer);
  if (it != entries_.end() && it->signer == signer) {
    if (sig < it->sig) {
      it->sig = sig;
      return true;
    }
    return false;
  }
  entries_.insert(it, SigEntry{signer, sig});
  return true;
}

std::size_t SignatureSet::merge(const SignatureSet& other) {
  if (other.empty()) return 0;
  std::vector<SigEntry> out;
  out.reserve(entries_.size() + other.entries_.size());
  std::size_t added = 0;
  auto a = entries_.begin();
  auto b = other.entries_.begin();
  while (a != entries_.end() || b != other.entries_.end()) {
    if (b == other.entries_.end() || (a != entries_.end() && a->signer < b->signer)) {
      out.push_back(*a++);
    } else if (a == entries_.end() || b->signer < a->signer) {
      out.push_back(*b++);
      ++added;
    } else {
      out.push_back(b->sig < a->sig ? *b : *a);
      ++a;
      ++b;
    }
  }
  entries_ = std::move(out);
  return added;
}

void SignatureSet::erase(ProcessId signer) {
  auto it = lower(entries_, signer);
  if (it != entries_.end() && it->signer == signer) entries_.erase(it);
}

std::size_t SignatureSet::count_excluding(ProcessId excluded) const {
  return entries_.size() - (contains(excluded) ? 1 : 0);
}

SignatureSet SignatureSet::truncated(std::size_t count) const {
  SignatureSet out;
  const auto take = std::min(count, entries_.size());
  out.entries_.assign(entries_.begin(), entries_.begin() + static_cast<std::ptrdiff_t>(take));
  return out;
}

std::vector<ProcessId> SignatureSet::signers() const {
  std::vector<ProcessId> out;
  out.reserve(entries_.size());
  for (const auto& e : entries_) out.push_back(e.signer);
  return out;
}

SignatureSet set_union(const SignatureSet& a, const SignatureSet& b) {
  SignatureSet out = a;
  out.merge(b);
  return out;
}

}  // namespace rtbyz
