#pragma once

#include <array>
#include <compare>
#include <cstdint>
#include <functional>
#include <memory>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace rtbyz {

/// Process identity. Indices are dense in [0, n) for the initial membership;
/// joiners get fresh ids above that.
enum class ProcessId : std::uint32_t {};

constexpr std::uint32_t to_index(ProcessId p) { return static_cast<std::uint32_t>(p); }
constexpr ProcessId pid(std::uint32_t i) { return static_cast<ProcessId>(i); }

/// Synchronous round counter shared by the whole world.
using Round = std::int64_t;

using Digest = std::array<std::uint8_t, 32>;
using Signature = std::array<std::uint8_t, 64>;
using Bytes = std::vector<std::uint8_t>;

class ParamError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

struct SystemParams {
  std::uint32_t n = 4;
  std::uint32_t f = 1;
  Round R = 6;
  std::uint32_t rep = 0;
  std::uint32_t k = 0;

  /// Derives f from n and rep and validates the remaining constraints.
  static SystemParams make(std::uint32_t n, Round R, std::uint32_t rep = 0, std::uint32_t k = 0);

  /// Throws ParamError when an invariant does not hold.
  void validate() const;
};

std::uint32_t max_faulty(std::uint32_t n, std::uint32_t rep);

/// Live quorum: 2f+1 plus the over-provisioned replicas that have not yet been
/// detected as crashed.
std::uint32_t quorum_size(const SystemParams& params, std::uint32_t detected_crashes = 0);

struct InstanceKey {
  ProcessId sender{};
  Round origin_round = 0;
  auto operator<=>(const InstanceKey&) const = default;
};

std::string to_string(const InstanceKey& key);

/// Immutable broadcast payload. The digest over the canonical encoding is
/// computed once at construction and shared by every message that carries it.
class BroadcastPayload {
 public:
  BroadcastPayload(ProcessId sender, Round origin_round, Bytes value);

  ProcessId sender() const { return sender_; }
  Round origin_round() const { return origin_round_; }
  const Bytes& value() const { return value_; }
  const Digest& digest() const { return digest_; }
  InstanceKey key() const { return {sender_, origin_round_}; }

 private:
  ProcessId sender_;
  Round origin_round_;
  Bytes value_;
  Digest digest_;
};

using PayloadPtr = std::shared_ptr<const BroadcastPayload>;

PayloadPtr make_payload(ProcessId sender, Round origin_round, Bytes value);
PayloadPtr make_payload(ProcessId sender, Round origin_round, std::string_view value);

InstanceKey instance_key(const BroadcastPayload& payload);

/// sender (8 bytes BE) || origin_round (8 bytes BE) || value.
Bytes canonical_encoding(ProcessId sender, Round origin_round, std::span<const std::uint8_t> value);

void put_be64(Bytes& out, std::uint64_t v);

std::string hex(std::span<const std::uint8_t> bytes);

}  // namespace rtbyz

template <>
struct std::hash<rtbyz::InstanceKey> {
  std::size_t operator()(const rtbyz::InstanceKey& k) const noexcept {
    return std::hash<std::uint64_t>{}((static_cast<std::uint64_t>(rtbyz::to_index(k.sender)) << 40) ^
                                      static_cast<std::uint64_t>(k.origin_round));
  }
};
