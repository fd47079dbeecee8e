#include "cdk/crypto.hpp"

#include <sodium.h>

#include <algorithm>
#include <cstring>

namespace cdk::crypto {
namespace {

void ensure_sodium()
{
    static const bool ready = [] { return sodium_init() >= 0; }();
    if (!ready) {
        throw CryptoError("libsodium failed to initialize");
    }
}

// Group order, little-endian.
constexpr std::array<std::uint8_t, 32> kOrder = {
    0xed, 0xd3, 0xf5, 0x5c, 0x1a, 0x63, 0x12, 0x58, 0xd6, 0x9c, 0xf7, 0xa2, 0xde, 0xf9, 0xde, 0x14,
    0x00, 0x00, 0x00, 0x00, 0x00, 0x00, 0x00, 0x00, 0x00, 0x00, 0x00, 0x00, 0x00, 0x00, 0x00, 0x10,
};

bool below_order(std::span<const std::uint8_t> le)
{
    for (std::size_t k = 32; k-- > 0;) {
        if (le[k] != kOrder[k]) {
            return le[k] < kOrder[k];
        }
    }
    return false;
}

Scalar labelled_scalar(std::string_view label, std::initializer_list<std::span<const std::uint8_t>> parts)
{
    ByteWriter w;
    w.field(label);
    for (const auto &part : parts) {
        w.field(part);
    }
    return hash_to_scalar(w.bytes());
}

}  // namespace

Scalar Scalar::from_canonical(std::span<const std::uint8_t> bytes)
{
    if (bytes.size() != kSize || !below_order(bytes)) {
        throw DecodeError("scalar is not canonically reduced");
    }
    Scalar s;
    std::copy(bytes.begin(), bytes.end(), s.bytes_.begin());
    return s;
}

Scalar Scalar::from_wide(std::span<const std::uint8_t, 64> wide)
{
    ensure_sodium();
    Scalar s;
    std::array<std::uint8_t, 64> copy{};
    std::copy(wide.begin(), wide.end(), copy.begin());
    crypto_core_ristretto255_scalar_reduce(s.bytes_.data(), copy.data());
    return s;
}

Scalar Scalar::from_u64(std::uint64_t value)
{
    Scalar s;
    for (std::size_t k = 0; k < 8; ++k) {
        s.bytes_[k] = static_cast<std::uint8_t>(value >> (8 * k));
    }
    return s;
}

bool Scalar::is_zero() const noexcept
{
    return sodium_is_zero(bytes_.data(), bytes_.size()) == 1;
}

Scalar Scalar::operator+(const Scalar &rhs) const
{
    ensure_sodium();
    Scalar out;
    crypto_core_ristretto255_scalar_add(out.bytes_.data(), bytes_.data(), rhs.bytes_.data());
    return out;
}

Scalar Scalar::operator-(const Scalar &rhs) const
{
    ensure_sodium();
    Scalar out;
    crypto_core_ristretto255_scalar_sub(out.bytes_.data(), bytes_.data(), rhs.bytes_.data());
    return out;
}

Scalar Scalar::operator*(const Scalar &rhs) const
{
    ensure_sodium();
    Scalar out;
    crypto_core_ristretto255_scalar_mul(out.bytes_.data(), bytes_.data(), rhs.bytes_.data());
    return out;
}

Scalar Scalar::operator-() const
{
    ensure_sodium();
    Scalar out;
    crypto_core_ristretto255_scalar_negate(out.bytes_.data(), bytes_.data());
    return out;
}

GroupElement GroupElement::generator()
{
    return base_mul(Scalar::from_u64(1));
}

bool GroupElement::is_valid_encoding(std::span<const std::uint8_t> bytes) noexcept
{
    if (bytes.size() != kSize) {
        return false;
    }
    if (sodium_init() < 0) {
        return false;
    }
    if (sodium_is_zero(bytes.data(), bytes.size()) == 1) {
        return false;
    }
    return crypto_core_ristretto255_is_valid_point(bytes.data()) == 1;
}

GroupElement GroupElement::decode(std::span<const std::uint8_t> bytes)
{
    if (!is_valid_encoding(bytes)) {
        throw DecodeError("invalid group element encoding");
    }
    GroupElement p;
    std::copy(bytes.begin(), bytes.end(), p.bytes_.begin());
    return p;
}

bool GroupElement::is_identity() const noexcept
{
    return sodium_is_zero(bytes_.data(), bytes_.size()) == 1;
}

GroupElement GroupElement::operator+(const GroupElement &rhs) const
{
    ensure_sodium();
    GroupElement out;
    if (crypto_core_ristretto255_add(out.bytes_.data(), bytes_.data(), rhs.bytes_.data()) != 0) {
        throw CryptoError("group addition on invalid element");
    }
    return out;
}

GroupElement GroupElement::operator-(const GroupElement &rhs) const
{
    ensure_sodium();
    GroupElement out;
    if (crypto_core_ristretto255_sub(out.bytes_.data(), bytes_.data(), rhs.bytes_.data()) != 0) {
        throw CryptoError("group subtraction on invalid element");
    }
    return out;
}

GroupElement operator*(const Scalar &k, const GroupElement &p)
{
    ensure_sodium();
    GroupElement out;
    if (k.is_zero() || p.is_identity()) {
        return out;
    }
    std::array<std::uint8_t, 32> result{};
    // Returns -1 (and writes the identity) when the product is the identity.
    if (crypto_scalarmult_ristretto255(result.data(), k.bytes().data(), p.bytes().data()) != 0) {
        return out;
    }
    return GroupElement::decode(result);
}

GroupElement base_mul(const Scalar &k)
{
    ensure_sodium();
    if (k.is_zero()) {
        return GroupElement{};
    }
    std::array<std::uint8_t, 32> result{};
    if (crypto_scalarmult_ristretto255_base(result.data(), k.bytes().data()) != 0) {
        return GroupElement{};
    }
    return GroupElement::decode(result);
}

std::array<std::uint8_t, 64> wide_hash(std::string_view tag, std::span<const std::uint8_t> data)
{
    ensure_sodium();
    std::array<std::uint8_t, 64> out{};
    for (std::uint8_t block = 0; block < 2; ++block) {
        crypto_hash_sha256_state st;
        crypto_hash_sha256_init(&st);
        crypto_hash_sha256_update(&st, reinterpret_cast<const unsigned char *>(tag.data()), tag.size());
        crypto_hash_sha256_update(&st, &block, 1);
        crypto_hash_sha256_update(&st, data.data(), data.size());
        crypto_hash_sha256_final(&st, out.data() + 32 * block);
    }
    return out;
}

Scalar hash_to_scalar(std::span<const std::uint8_t> data)
{
    const auto wide = wide_hash(kHashToScalarTag, data);
    return Scalar::from_wide(wide);
}

GroupElement hash_to_group(std::span<const std::uint8_t> data)
{
    const auto wide = wide_hash(kHashToGroupTag, data);
    std::array<std::uint8_t, 32> point{};
    crypto_core_ristretto255_from_hash(point.data(), wide.data());
    return GroupElement::decode(point);
}

KeyPair KeyPair::from_secret(const Scalar &sk)
{
    if (sk.is_zero()) {
        throw CryptoError("zero secret key");
    }
    return KeyPair{sk, base_mul(sk)};
}

KeyPair derive_keypair(const Seed &seed)
{
    for (std::uint32_t counter = 0;; ++counter) {
        ByteWriter ctr;
        ctr.u32(counter);
        const Scalar sk = labelled_scalar("keygen", {seed, ctr.bytes()});
        if (!sk.is_zero()) {
            return KeyPair::from_secret(sk);
        }
    }
}

void encode_scalar(ByteWriter &out, const Scalar &s)
{
    out.field(s.bytes());
}

void encode_point(ByteWriter &out, const GroupElement &p)
{
    out.field(p.bytes());
}

Scalar decode_scalar(ByteReader &in)
{
    return Scalar::from_canonical(in.field());
}

GroupElement decode_point(ByteReader &in)
{
    return GroupElement::decode(in.field());
}

Bytes Signature::encode() const
{
    ByteWriter w;
    encode_point(w, commitment);
    encode_scalar(w, response);
    return w.take();
}

Signature Signature::decode(std::span<const std::uint8_t> bytes)
{
    ByteReader r(bytes);
    Signature sig;
    sig.commitment = decode_point(r);
    sig.response = decode_scalar(r);
    r.expect_end();
    return sig;
}

namespace {

Scalar schnorr_challenge(const GroupElement &commitment, const GroupElement &pk, std::span<const std::uint8_t> msg)
{
    return labelled_scalar("schnorr-challenge", {commitment.bytes(), pk.bytes(), msg});
}

}  // namespace

Signature sign(const Scalar &sk, std::span<const std::uint8_t> msg)
{
    if (msg.empty()) {
        throw CryptoError("refusing to sign an empty challenge");
    }
    const KeyPair kp = KeyPair::from_secret(sk);
    const Scalar nonce = labelled_scalar("schnorr-nonce", {sk.bytes(), msg});
    Signature sig;
    sig.commitment = base_mul(nonce);
    sig.response = nonce + schnorr_challenge(sig.commitment, kp.pk, msg) * sk;
    return sig;
}

bool verify(const GroupElement &pk, std::span<const std::uint8_t> msg, const Signature &sig) noexcept
{
    try {
        if (pk.is_identity() || sig.commitment.is_identity() || msg.empty()) {
            return false;
        }
        const Scalar c = schnorr_challenge(sig.commitment, pk, msg);
        return base_mul(sig.response) == sig.commitment + c * pk;
    } catch (const std::exception &) {
        return false;
    }
}

bool verify_encoded(std::span<const std::uint8_t> pk, std::span<const std::uint8_t> msg,
                    std::span<const std::uint8_t> sig) noexcept
{
    try {
        return verify(GroupElement::decode(pk), msg, Signature::decode(sig));
    } catch (const std::exception &) {
        return false;
    }
}

KeyImage key_image(const KeyPair &kp)
{
    return KeyImage{kp.sk * hash_to_group(kp.pk.bytes())};
}

Bytes RingSignature::encode() const
{
    ByteWriter w;
    encode_point(w, key_image.image);
    encode_scalar(w, seed_challenge);
    w.list(responses, [](ByteWriter &e, const Scalar &s) { e.raw(s.bytes()); });
    return w.take();
}

RingSignature RingSignature::decode(std::span<const std::uint8_t> bytes)
{
    ByteReader r(bytes);
    RingSignature rsig;
    rsig.key_image.image = decode_point(r);
    rsig.seed_challenge = decode_scalar(r);
    rsig.responses = r.list([](ByteReader &e) { return Scalar::from_canonical(e.raw(Scalar::kSize)); });
    r.expect_end();
    return rsig;
}

namespace {

// Transcript prefix shared by every link of the challenge cycle.
Bytes ring_prefix(std::span<const GroupElement> ring, const KeyImage &image, std::span<const std::uint8_t> msg)
{
    ByteWriter w;
    w.field(std::string_view("lsag"));
    w.list(ring, [](ByteWriter &e, const GroupElement &p) { e.raw(p.bytes()); });
    encode_point(w, image.image);
    w.field(msg);
    return w.take();
}

Scalar ring_link(const Bytes &prefix, const GroupElement &left, const GroupElement &right)
{
    ByteWriter w;
    w.raw(prefix);
    encode_point(w, left);
    encode_point(w, right);
    return hash_to_scalar(w.bytes());
}

}  // namespace

RingSignature ring_sign(std::span<const GroupElement> ring, std::size_t secret_index, const Scalar &sk,
                        std::span<const std::uint8_t> msg)
{
    const std::size_t n = ring.size();
    if (n == 0) {
        throw CryptoError("empty ring");
    }
    if (secret_index >= n) {
        throw CryptoError("secret index out of range");
    }
    const KeyPair kp = KeyPair::from_secret(sk);
    if (kp.pk != ring[secret_index]) {
        throw CryptoError("secret key does not match the ring member at the secret index");
    }

    RingSignature rsig;
    rsig.key_image = key_image(kp);
    rsig.responses.resize(n);

    const Bytes prefix = ring_prefix(ring, rsig.key_image, msg);
    std::vector<GroupElement> hashed(n);
    for (std::size_t k = 0; k < n; ++k) {
        hashed[k] = hash_to_group(ring[k].bytes());
    }

    const Scalar alpha = labelled_scalar("lsag-nonce", {sk.bytes(), prefix});
    std::vector<Scalar> challenge(n);
    challenge[(secret_index + 1) % n] = ring_link(prefix, base_mul(alpha), alpha * hashed[secret_index]);

    for (std::size_t step = 1; step < n; ++step) {
        const std::size_t k = (secret_index + step) % n;
        ByteWriter idx;
        idx.u32(static_cast<std::uint32_t>(k));
        rsig.responses[k] = labelled_scalar("lsag-decoy", {sk.bytes(), prefix, idx.bytes()});
        const GroupElement left = base_mul(rsig.responses[k]) + challenge[k] * ring[k];
        const GroupElement right = rsig.responses[k] * hashed[k] + challenge[k] * rsig.key_image.image;
        challenge[(k + 1) % n] = ring_link(prefix, left, right);
    }

    rsig.responses[secret_index] = alpha - challenge[secret_index] * sk;
    rsig.seed_challenge = challenge[0];
    return rsig;
}

bool ring_verify(std::span<const GroupElement> ring, std::span<const std::uint8_t> msg,
                 const RingSignature &rsig) noexcept
{
    try {
        const std::size_t n = ring.size();
        if (n == 0 || rsig.responses.size() != n || rsig.key_image.image.is_identity()) {
            return false;
        }
        if (std::any_of(ring.begin(), ring.end(), [](const GroupElement &p) { return p.is_identity(); })) {
            return false;
        }
        const Bytes prefix = ring_prefix(ring, rsig.key_image, msg);
        Scalar c = rsig.seed_challenge;
        for (std::size_t k = 0; k < n; ++k) {
            const GroupElement left = base_mul(rsig.responses[k]) + c * ring[k];
            const GroupElement right =
                rsig.responses[k] * hash_to_group(ring[k].bytes()) + c * rsig.key_image.image;
            c = ring_link(prefix, left, right);
        }
        return c == rsig.seed_challenge;
    } catch (const std::exception &) {
        return false;
    }
}

}  // namespace cdk::crypto
