// ECDSA over P-256 through OpenSSL's EC_KEY interface. Private scalars are
// derived from the world seed so key material is reproducible; signature bytes
// are randomized by OpenSSL and are not.
#include <openssl/bn.h>
#include <openssl/ec.h>
#include <openssl/ecdsa.h>
#include <openssl/obj_mac.h>

#include <stdexcept>

#include "rtbyz/crypto.hpp"

namespace rtbyz {

namespace {

struct EcKeyDeleter {
  void operator()(EC_KEY* k) const { EC_KEY_free(k); }
};
using EcKeyPtr = std::unique_ptr<EC_KEY, EcKeyDeleter>;

struct BnDeleter {
  void operator()(BIGNUM* b) const { BN_free(b); }
};
using BnPtr = std::unique_ptr<BIGNUM, BnDeleter>;

[[noreturn]] void fail(const char* what) { throw std::runtime_error(std::string("openssl: ") + what); }

std::shared_ptr<const void> share(EcKeyPtr key) {
  EC_KEY* raw = key.release();
  return std::shared_ptr<const void>(raw, [](const void* p) { EC_KEY_free(static_cast<EC_KEY*>(const_cast<void*>(p))); });
}

const EC_KEY* as_key(const std::shared_ptr<const void>& p) { return static_cast<const EC_KEY*>(p.get()); }

EcKeyPtr key_from_public(const Bytes& bytes) {
  EcKeyPtr key(EC_KEY_new_by_curve_name(NID_X9_62_prime256v1));
  if (!key) fail("EC_KEY_new_by_curve_name");
  const EC_GROUP* group = EC_KEY_get0_group(key.get());
  EC_POINT* point = EC_POINT_new(group);
  const bool ok = EC_POINT_oct2point(group, point, bytes.data(), bytes.size(), nullptr) == 1 &&
                  EC_KEY_set_public_key(key.get(), point) == 1;
  EC_POINT_free(point);
  if (!ok) return nullptr;
  return key;
}

class EcdsaP256Scheme final : public SignatureScheme {
 public:
  Backend backend() const override { return Backend::EcdsaP256; }

  KeyPair generate(ProcessId owner, std::uint64_t seed) const override {
    EcKeyPtr key(EC_KEY_new_by_curve_name(NID_X9_62_prime256v1));
    if (!key) fail("EC_KEY_new_by_curve_name");
    const EC_GROUP* group = EC_KEY_get0_group(key.get());

    Bytes material;
    put_be64(material, seed);
    put_be64(material, to_index(owner));
    const Digest h = tagged_digest("rtbyz.ecdsa.key", material);

    BnPtr order(BN_new());
    BnPtr priv(BN_bin2bn(h.data(), static_cast<int>(h.size()), nullptr));
    BN_CTX* ctx = BN_CTX_new();
    if (!order || !priv || !ctx || EC_GROUP_get_order(group, order.get(), ctx) != 1) fail("group order");
    // Map into [1, order-1].
    BnPtr one(BN_new());
    BN_one(one.get());
    BnPtr range(BN_dup(order.get()));
    BN_sub(range.get(), order.get(), one.get());
    BN_mod(priv.get(), priv.get(), range.get(), ctx);
    BN_add(priv.get(), priv.get(), one.get());

    EC_POINT* pub = EC_POINT_new(group);
    if (EC_POINT_mul(group, pub, priv.get(), nullptr, nullptr, ctx) != 1 ||
        EC_KEY_set_private_key(key.get(), priv.get()) != 1 || EC_KEY_set_public_key(key.get(), pub) != 1)
      fail("key derivation");

    KeyPair kp;
    kp.owner = owner;
    kp.secret.resize(32);
    BN_bn2binpad(priv.get(), kp.secret.data(), 32);
    kp.pub.bytes.resize(33);
    if (EC_POINT_point2oct(group, pub, POINT_CONVERSION_COMPRESSED, kp.pub.bytes.data(), 33, ctx) != 33)
      fail("point encoding");
    EC_POINT_free(pub);
    BN_CTX_free(ctx);

    kp.pub.native = share(key_from_public(kp.pub.bytes));
    kp.native = share(std::move(key));
    return kp;
  }

  Signature sign(const KeyPair& key, const Digest& digest) const override {
    ECDSA_SIG* sig = ECDSA_do_sign(digest.data(), static_cast<int>(digest.size()),
                                   const_cast<EC_KEY*>(as_key(key.native)));
    if (sig == nullptr) fail("ECDSA_do_sign");
    Signature out{};
    const BIGNUM* r = nullptr;
    const BIGNUM* s = nullptr;
    ECDSA_SIG_get0(sig, &r, &s);
    BN_bn2binpad(r, out.data(), 32);
    BN_bn2binpad(s, out.data() + 32, 32);
    ECDSA_SIG_free(sig);
    return out;
  }

  bool verify(const PublicKey& pub, const Digest& digest, const Signature& sig) const override {
    std::shared_ptr<const void> parsed = pub.native;
    if (!parsed) {
      EcKeyPtr k = key_from_public(pub.bytes);
      if (!k) return false;
      parsed = share(std::move(k));
    }
    ECDSA_SIG* es = ECDSA_SIG_new();
    BIGNUM* r = BN_bin2bn(sig.data(), 32, nullptr);
    BIGNUM* s = BN_bin2bn(sig.data() + 32, 32, nullptr);
    ECDSA_SIG_set0(es, r, s);
    const int rc = ECDSA_do_verify(digest.data(), static_cast<int>(digest.size()), es,
                                   const_cast<EC_KEY*>(as_key(parsed)));
    ECDSA_SIG_free(es);
    return rc == 1;
  }
};

}  // namespace

std::unique_ptr<SignatureScheme> make_ecdsa_p256_scheme() { return std::make_unique<EcdsaP256Scheme>(); }

}  // namespace rtbyz
