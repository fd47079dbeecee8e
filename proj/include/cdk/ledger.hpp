#pragma once

// Append-only chain of coinbase, join-type and ring-type transactions.
// Nothing here records the hidden permutation of a join or the true input
// of a ring; that ground truth lives in WorldOracle (world_oracle.hpp).

#include "cdk/bytes.hpp"
#include "cdk/crypto.hpp"

#include <compare>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

namespace cdk::ledger {

using crypto::GroupElement;
using crypto::KeyImage;
using TxId = Digest;

enum class TxType : std::uint8_t { coinbase = 0x00, join = 0x01, ring = 0x02 };

struct OutputRef {
    TxId tx_id{};
    std::uint32_t index = 0;

    auto operator<=>(const OutputRef &) const = default;
};

std::string to_string(const OutputRef &ref);

struct Output {
    OutputRef id;  // assigned from the enclosing transaction; not part of canonical bytes
    GroupElement owner_pk;
    std::uint64_t value = 0;

    bool operator==(const Output &) const = default;
};

struct CoinbaseTx {
    TxId id{};
    std::vector<Output> outputs;
};

struct JoinTx {
    TxId id{};
    std::vector<OutputRef> inputs;
    std::vector<Output> outputs;
    std::vector<crypto::Signature> input_sigs;

    std::size_t size() const noexcept { return inputs.size(); }
};

struct RingTx {
    TxId id{};
    std::vector<OutputRef> ring;
    Output output;
    crypto::RingSignature ring_sig;

    std::size_t size() const noexcept { return ring.size(); }
    const KeyImage &key_image() const noexcept { return ring_sig.key_image; }
};

using Transaction = std::variant<CoinbaseTx, JoinTx, RingTx>;

TxType tx_type(const Transaction &tx);
const TxId &tx_id(const Transaction &tx);
std::vector<OutputRef> tx_refs(const Transaction &tx);
std::vector<Output> tx_outputs(const Transaction &tx);

void encode_ref(ByteWriter &out, const OutputRef &ref);
OutputRef decode_ref(ByteReader &in);

/// type tag || length-prefixed ref list || length-prefixed output list.
/// Hashed for transaction ids and signed by input and ring signatures.
Bytes canonical_bytes(TxType type, const std::vector<OutputRef> &refs, const std::vector<Output> &outputs);
TxId compute_tx_id(TxType type, const std::vector<OutputRef> &refs, const std::vector<Output> &outputs);

/// Assigns `id` for the transaction and its outputs from the canonical bytes.
void seal(CoinbaseTx &tx);
void seal(JoinTx &tx);
void seal(RingTx &tx);

/// canonical bytes followed by one length-prefixed authorization field.
Bytes encode_transaction(const Transaction &tx);
Transaction decode_transaction(std::span<const std::uint8_t> bytes);

class NotFound : public std::out_of_range {
public:
    using std::out_of_range::out_of_range;
};

class Ledger {
public:
    Ledger() = default;

    /// Builds indexes over `txs` without validating them; see validate_ledger.
    static Ledger from_transactions(std::vector<Transaction> txs);

    /// Appends without validation. Checked appends live in world_oracle.hpp.
    void append_unchecked(Transaction tx);

    const std::vector<Transaction> &transactions() const noexcept { return txs_; }
    std::size_t size() const noexcept { return txs_.size(); }

    const Output &resolve_ref(const OutputRef &ref) const;
    std::optional<Output> find_output(const OutputRef &ref) const;
    std::optional<std::size_t> position(const TxId &id) const;
    const Transaction &tx(const TxId &id) const;
    const JoinTx *find_join(const TxId &id) const;
    const RingTx *find_ring(const TxId &id) const;
    bool key_image_seen(const KeyImage &image) const;
    const std::set<KeyImage> &key_images() const noexcept { return key_images_; }

    /// Owner keys of a list of references, in order.
    std::vector<GroupElement> owner_keys(const std::vector<OutputRef> &refs) const;

    Bytes serialize() const;
    static Ledger deserialize(std::span<const std::uint8_t> bytes);

private:
    std::vector<Transaction> txs_;
    std::map<TxId, std::size_t> positions_;
    std::map<OutputRef, Output> output_index_;
    std::set<KeyImage> key_images_;
};

struct Violation {
    std::string kind;  // "unresolvable", "ordering", "signature", "key image reuse", ...
    std::size_t position = 0;
    std::string detail;
};

/// Total check of a ledger: reference resolvability, backward ordering,
/// signatures, key-image uniqueness, public double spends and value rules.
std::vector<Violation> validate_ledger(const Ledger &ledger);

}  // namespace cdk::ledger
