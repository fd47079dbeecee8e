#pragma once

// Discrete-log primitives over the ristretto255 prime-order group: keypairs,
// Schnorr challenge signatures and LSAG-style linkable ring signatures whose
// key image I = sk * H(pk) does not depend on the ring or the message.

#include "cdk/bytes.hpp"

#include <array>
#include <compare>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string_view>
#include <vector>

namespace cdk::crypto {

inline constexpr std::string_view kHashToGroupTag = "CDK/v1/h2g";
inline constexpr std::string_view kHashToScalarTag = "CDK/v1/h2s";

class CryptoError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Integer modulo the group order, always held in reduced form.
class Scalar {
public:
    static constexpr std::size_t kSize = 32;
    using Encoding = std::array<std::uint8_t, kSize>;

    Scalar() = default;  // zero

    /// Throws DecodeError unless `bytes` is the canonical encoding (< group order).
    static Scalar from_canonical(std::span<const std::uint8_t> bytes);
    /// Reduces 64 uniformly distributed bytes modulo the group order.
    static Scalar from_wide(std::span<const std::uint8_t, 64> wide);
    static Scalar from_u64(std::uint64_t value);

    const Encoding &bytes() const noexcept { return bytes_; }
    bool is_zero() const noexcept;

    Scalar operator+(const Scalar &rhs) const;
    Scalar operator-(const Scalar &rhs) const;
    Scalar operator*(const Scalar &rhs) const;
    Scalar operator-() const;

    auto operator<=>(const Scalar &) const = default;

private:
    Encoding bytes_{};
};

/// Element of the prime-order group in compressed ristretto255 encoding.
/// The identity is representable for intermediate arithmetic but is never
/// accepted by `decode`.
class GroupElement {
public:
    static constexpr std::size_t kSize = 32;
    using Encoding = std::array<std::uint8_t, kSize>;

    GroupElement() = default;  // identity

    static GroupElement generator();
    /// Throws DecodeError on non-canonical encodings and on the identity.
    static GroupElement decode(std::span<const std::uint8_t> bytes);
    static bool is_valid_encoding(std::span<const std::uint8_t> bytes) noexcept;

    const Encoding &bytes() const noexcept { return bytes_; }
    bool is_identity() const noexcept;

    GroupElement operator+(const GroupElement &rhs) const;
    GroupElement operator-(const GroupElement &rhs) const;

    auto operator<=>(const GroupElement &) const = default;

private:
    Encoding bytes_{};
};

GroupElement operator*(const Scalar &k, const GroupElement &p);
GroupElement base_mul(const Scalar &k);

/// 64 bytes of domain-separated SHA-256 output: H(tag||0||data) || H(tag||1||data).
std::array<std::uint8_t, 64> wide_hash(std::string_view tag, std::span<const std::uint8_t> data);
Scalar hash_to_scalar(std::span<const std::uint8_t> data);
GroupElement hash_to_group(std::span<const std::uint8_t> data);

struct KeyPair {
    Scalar sk;
    GroupElement pk;

    /// Throws CryptoError for the zero scalar.
    static KeyPair from_secret(const Scalar &sk);
    bool operator==(const KeyPair &) const = default;
};

using Seed = std::array<std::uint8_t, 32>;

KeyPair derive_keypair(const Seed &seed);

struct Signature {
    GroupElement commitment;
    Scalar response;

    Bytes encode() const;
    static Signature decode(std::span<const std::uint8_t> bytes);
    bool operator==(const Signature &) const = default;
};

/// Deterministic Schnorr signature. Throws CryptoError on an empty message.
Signature sign(const Scalar &sk, std::span<const std::uint8_t> msg);
bool verify(const GroupElement &pk, std::span<const std::uint8_t> msg, const Signature &sig) noexcept;
/// Verification entry point for untrusted encodings; malformed bytes yield false.
bool verify_encoded(std::span<const std::uint8_t> pk, std::span<const std::uint8_t> msg,
                    std::span<const std::uint8_t> sig) noexcept;

struct KeyImage {
    GroupElement image;
    auto operator<=>(const KeyImage &) const = default;
};

KeyImage key_image(const KeyPair &kp);

struct RingSignature {
    KeyImage key_image;
    Scalar seed_challenge;
    std::vector<Scalar> responses;

    Bytes encode() const;
    static RingSignature decode(std::span<const std::uint8_t> bytes);
    bool operator==(const RingSignature &) const = default;
};

/// Signs `msg` on behalf of `ring` with the key at `secret_index`. Throws
/// CryptoError when the index is out of range or sk does not match that member.
RingSignature ring_sign(std::span<const GroupElement> ring, std::size_t secret_index, const Scalar &sk,
                        std::span<const std::uint8_t> msg);
bool ring_verify(std::span<const GroupElement> ring, std::span<const std::uint8_t> msg,
                 const RingSignature &rsig) noexcept;

void encode_scalar(ByteWriter &out, const Scalar &s);
void encode_point(ByteWriter &out, const GroupElement &p);
Scalar decode_scalar(ByteReader &in);
GroupElement decode_point(ByteReader &in);

}  // namespace cdk::crypto
