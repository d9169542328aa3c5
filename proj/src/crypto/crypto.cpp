#include "rtbyz/crypto.hpp"

#include <sodium.h>

#include <algorithm>
#include <cstring>
#include <stdexcept>

namespace rtbyz {

namespace {

struct SodiumInit {
  SodiumInit() {
    if (sodium_init() < 0) throw std::runtime_error("libsodium initialisation failed");
  }
};

void ensure_sodium() { static SodiumInit init; }

Bytes derive_secret(std::string_view label, ProcessId owner, std::uint64_t seed) {
  ensure_sodium();
  Bytes msg(label.begin(), label.end());
  put_be64(msg, seed);
  put_be64(msg, to_index(owner));
  Bytes out(32);
  crypto_generichash(out.data(), out.size(), msg.data(), msg.size(), nullptr, 0);
  return out;
}

class SimScheme final : public SignatureScheme {
 public:
  Backend backend() const override { return Backend::Sim; }

  KeyPair generate(ProcessId owner, std::uint64_t seed) const override {
    KeyPair kp;
    kp.owner = owner;
    kp.secret = derive_secret("rtbyz.sim.key", owner, seed);
    kp.pub.bytes.reserve(33);
    kp.pub.bytes.push_back(0x02);
    kp.pub.bytes.insert(kp.pub.bytes.end(), kp.secret.begin(), kp.secret.end());
    return kp;
  }

  Signature sign(const KeyPair& key, const Digest& digest) const override {
    return mac(key.secret.data(), digest);
  }

  bool verify(const PublicKey& pub, const Digest& digest, const Signature& sig) const override {
    if (pub.bytes.size() != 33) return false;
    const Signature expect = mac(pub.bytes.data() + 1, digest);
    return sodium_memcmp(expect.data(), sig.data(), sig.size()) == 0;
  }

 private:
  static Signature mac(const std::uint8_t* key, const Digest& digest) {
    Signature out{};
    crypto_generichash(out.data(), out.size(), digest.data(), digest.size(), key, 32);
    return out;
  }
};

}  // namespace

Backend parse_backend(std::string_view name) {
  if (name == "sim") return Backend::Sim;
  if (name == "ecdsa-p256") return Backend::EcdsaP256;
  throw ParamError("unknown crypto backend '" + std::string(name) + "'");
}

std::string_view to_string(Backend b) { return b == Backend::Sim ? "sim" : "ecdsa-p256"; }

Digest sha256(std::span<const std::uint8_t> data) {
  ensure_sodium();
  Digest out{};
  crypto_hash_sha256(out.data(), data.data(), data.size());
  return out;
}

Digest tagged_digest(std::string_view tag, std::span<const std::uint8_t> body) {
  ensure_sodium();
  crypto_hash_sha256_state st;
  crypto_hash_sha256_init(&st);
  crypto_hash_sha256_update(&st, reinterpret_cast<const unsigned char*>(tag.data()), tag.size());
  crypto_hash_sha256_update(&st, body.data(), body.size());
  Digest out{};
  crypto_hash_sha256_final(&st, out.data());
  return out;
}

std::unique_ptr<SignatureScheme> make_sim_scheme() {
  ensure_sodium();
  return std::make_unique<SimScheme>();
}

std::unique_ptr<SignatureScheme> make_scheme(Backend b) {
  return b == Backend::Sim ? make_sim_scheme() : make_ecdsa_p256_scheme();
}

VerifyResult verify_set(const SignatureScheme& scheme, const std::map<ProcessId, PublicKey>& publics,
                        const Digest& digest, const SignatureSet& sigs) {
  VerifyResult out;
  for (const auto& e : sigs) {
    auto it = publics.find(e.signer);
    if (it != publics.end() && scheme.verify(it->second, digest, e.sig))
      out.valid_subset.insert(e);
    else
      out.rejected.push_back(e.signer);
  }
  return out;
}

const KeyPair& KeyRegistry::enroll(ProcessId owner, std::uint64_t seed) {
  const auto idx = to_index(owner);
  if (keys_.size() <= idx) keys_.resize(idx + 1);
  keys_[idx] = std::make_unique<KeyPair>(scheme_->generate(owner, seed));
  return *keys_[idx];
}

bool KeyRegistry::known(ProcessId p) const {
  const auto idx = to_index(p);
  return idx < keys_.size() && keys_[idx] != nullptr;
}

const PublicKey* KeyRegistry::public_key(ProcessId p) const {
  return known(p) ? &keys_[to_index(p)]->pub : nullptr;
}

const KeyPair& KeyRegistry::key_pair(ProcessId p) const {
  if (!known(p)) throw std::out_of_range("no key for process " + std::to_string(to_index(p)));
  return *keys_[to_index(p)];
}

Signer KeyRegistry::signer(ProcessId owner) const { return Signer(scheme_, &key_pair(owner)); }

bool KeyRegistry::verify(ProcessId signer, const Digest& digest, const Signature& sig) const {
  const PublicKey* pk = public_key(signer);
  return pk != nullptr && scheme_->verify(*pk, digest, sig);
}

VerifyResult KeyRegistry::verify_set(const Digest& digest, const SignatureSet& sigs) const {
  VerifyResult out;
  for (const auto& e : sigs) {
    if (verify(e.signer, digest, e.sig))
      out.valid_subset.insert(e);
    else
      out.rejected.push_back(e.signer);
  }
  return out;
}

}  // namespace rtbyz
