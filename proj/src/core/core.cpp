#include "rtbyz/core.hpp"

#include <algorithm>

#include "rtbyz/crypto.hpp"

namespace rtbyz {

std::uint32_t max_faulty(std::uint32_t n, std::uint32_t rep) {
  if (n == 0) return 0;
  if (rep > 0) {
    if (n < rep + 1) return 0;
    return (n - rep - 1) / 3;
  }
  return (n - 1) / 3;
}

SystemParams SystemParams::make(std::uint32_t n, Round R, std::uint32_t rep, std::uint32_t k) {
  SystemParams p;
  p.n = n;
  p.rep = rep;
  p.R = R;
  p.k = k;
  p.f = max_faulty(n, rep);
  p.validate();
  return p;
}

void SystemParams::validate() const {
  if (n < 1) throw ParamError("n must be positive");
  if (rep + 1 > n) throw ParamError("rep too large for n");
  if (f != max_faulty(n, rep))
    throw ParamError("f=" + std::to_string(f) + " does not match n=" + std::to_string(n) +
                     ", rep=" + std::to_string(rep));
  if (n < 3 * f + 1) throw ParamError("n < 3f+1");
  if (R < 2 * static_cast<Round>(k) + 2)
    throw ParamError("R=" + std::to_string(R) + " below 2k+2 for k=" + std::to_string(k));
}

std::uint32_t quorum_size(const SystemParams& params, std::uint32_t detected_crashes) {
  params.validate();
  const std::uint32_t base = 2 * params.f + 1;
  if (detected_crashes >= params.rep) return base;
  return base + (params.rep - detected_crashes);
}

std::string to_string(const InstanceKey& key) {
  return std::to_string(to_index(key.sender)) + ":" + std::to_string(key.origin_round);
}

void put_be64(Bytes& out, std::uint64_t v) {
  for (int shift = 56; shift >= 0; shift -= 8) out.push_back(static_cast<std::uint8_t>(v >> shift));
}

Bytes canonical_encoding(ProcessId sender, Round origin_round, std::span<const std::uint8_t> value) {
  Bytes out;
  out.reserve(16 + value.size());
  put_be64(out, to_index(sender));
  put_be64(out, static_cast<std::uint64_t>(origin_round));
  out.insert(out.end(), value.begin(), value.end());
  return out;
}

BroadcastPayload::BroadcastPayload(ProcessId sender, Round origin_round, Bytes value)
    : sender_(sender), origin_round_(origin_round), value_(std::move(value)) {
  digest_ = sha256(canonical_encoding(sender_, origin_round_, value_));
}

PayloadPtr make_payload(ProcessId sender, Round origin_round, Bytes value) {
  return std::make_shared<const BroadcastPayload>(sender, origin_round, std::move(value));
}

PayloadPtr make_payload(ProcessId sender, Round origin_round, std::string_view value) {
  return make_payload(sender, origin_round, Bytes(value.begin(), value.end()));
}

InstanceKey instance_key(const BroadcastPayload& payload) { return payload.key(); }

std::string hex(std::span<const std::uint8_t> bytes) {
  static constexpr char digits[] = "0123456789abcdef";
  std::string out;
  out.reserve(bytes.size() * 2);
  for (auto b : bytes) {
    out.push_back(digits[b >> 4]);
    out.push_back(digits[b & 0xf]);
  }
  return out;
}

}  // namespace rtbyz
