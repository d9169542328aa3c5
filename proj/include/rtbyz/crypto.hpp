#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <span>
#include <string_view>
#include <vector>

#include "rtbyz/core.hpp"
#include "rtbyz/signature_set.hpp"

namespace rtbyz {

enum class Backend { Sim, EcdsaP256 };

Backend parse_backend(std::string_view name);
std::string_view to_string(Backend b);

Digest sha256(std::span<const std::uint8_t> data);

/// sha256(tag || body); keeps digests of different message kinds apart.
Digest tagged_digest(std::string_view tag, std::span<const std::uint8_t> body);

struct PublicKey {
  Bytes bytes;                          // 33 bytes, compressed-point sized
  std::shared_ptr<const void> native;   // backend-specific parsed form
};

struct KeyPair {
  ProcessId owner{};
  Bytes secret;
  PublicKey pub;
  std::shared_ptr<const void> native;
};

class SignatureScheme {
 public:
  virtual ~SignatureScheme() = default;
  virtual Backend backend() const = 0;
  /// Deterministic in (owner, seed).
  virtual KeyPair generate(ProcessId owner, std::uint64_t seed) const = 0;
  virtual Signature sign(const KeyPair& key, const Digest& digest) const = 0;
  virtual bool verify(const PublicKey& pub, const Digest& digest, const Signature& sig) const = 0;
};

/// Keyed BLAKE2b-512. Symmetric: verification material equals the signing key.
/// Unforgeability in simulation comes from the adversary code never touching
/// other processes' keys.
std::unique_ptr<SignatureScheme> make_sim_scheme();
std::unique_ptr<SignatureScheme> make_ecdsa_p256_scheme();
std::unique_ptr<SignatureScheme> make_scheme(Backend b);

struct VerifyResult {
  SignatureSet valid_subset;
  std::vector<ProcessId> rejected;
};

VerifyResult verify_set(const SignatureScheme& scheme, const std::map<ProcessId, PublicKey>& publics,
                        const Digest& digest, const SignatureSet& sigs);

class Signer;

/// Static in-world key directory.
class KeyRegistry {
 public:
  explicit KeyRegistry(std::shared_ptr<const SignatureScheme> scheme) : scheme_(std::move(scheme)) {}

  /// Generates and registers the key of `owner`; returns the full pair.
  const KeyPair& enroll(ProcessId owner, std::uint64_t seed);

  bool known(ProcessId p) const;
  const PublicKey* public_key(ProcessId p) const;
  const KeyPair& key_pair(ProcessId p) const;
  const SignatureScheme& scheme() const { return *scheme_; }
  std::shared_ptr<const SignatureScheme> scheme_ptr() const { return scheme_; }
  Signer signer(ProcessId owner) const;

  bool verify(ProcessId signer, const Digest& digest, const Signature& sig) const;
  VerifyResult verify_set(const Digest& digest, const SignatureSet& sigs) const;

 private:
  std::shared_ptr<const SignatureScheme> scheme_;
  std::vector<std::unique_ptr<KeyPair>> keys_;
};

/// Signing capability bound to one owner.
class Signer {
 public:
  Signer(std::shared_ptr<const SignatureScheme> scheme, const KeyPair* key)
      : scheme_(std::move(scheme)), key_(key) {}
  ProcessId owner() const { return key_->owner; }
  Signature sign(const Digest& digest) const { return scheme_->sign(*key_, digest); }
  const PublicKey& public_key() const { return key_->pub; }

 private:
  std::shared_ptr<const SignatureScheme> scheme_;
  const KeyPair* key_;
};

}  // namespace rtbyz
