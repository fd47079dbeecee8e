#pragma once

// Hidden ground truth of a simulated world and the checked append operations
// that need it. Only the simulation harness and tests include this header;
// testimony verification and the investigation engine never do.

#include "cdk/ledger.hpp"

#include <map>
#include <optional>
#include <stdexcept>
#include <vector>

namespace cdk::ledger {

using EntityId = std::uint32_t;

class WorldOracle {
public:
    void register_key(const crypto::KeyPair &kp, EntityId owner);

    std::optional<crypto::Scalar> secret_key(const GroupElement &pk) const;
    std::optional<EntityId> owner(const GroupElement &pk) const;

    void record_psi(const TxId &tx, std::vector<std::uint32_t> psi);
    void record_sigma(const TxId &tx, std::uint32_t sigma);
    /// psi[k] is the input funding output k.
    const std::vector<std::uint32_t> *psi(const TxId &tx) const;
    std::optional<std::uint32_t> sigma(const TxId &tx) const;

    void mark_spent(const OutputRef &ref, const TxId &spender);
    bool is_spent(const OutputRef &ref) const;
    std::optional<TxId> spender(const OutputRef &ref) const;

    const std::map<GroupElement, EntityId> &key_owners() const noexcept { return key_owner_; }
    const std::map<GroupElement, crypto::Scalar> &secret_keys() const noexcept { return secret_keys_; }
    const std::map<TxId, std::vector<std::uint32_t>> &all_psi() const noexcept { return psi_; }
    const std::map<TxId, std::uint32_t> &all_sigma() const noexcept { return sigma_; }
    const std::map<OutputRef, TxId> &spends() const noexcept { return spent_; }

private:
    std::map<GroupElement, EntityId> key_owner_;
    std::map<GroupElement, crypto::Scalar> secret_keys_;
    std::map<TxId, std::vector<std::uint32_t>> psi_;
    std::map<TxId, std::uint32_t> sigma_;
    std::map<OutputRef, TxId> spent_;
};

class LedgerRejection : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct CoinbaseOutput {
    GroupElement owner_pk;
    std::uint64_t value = 0;
};

TxId append_coinbase(Ledger &ledger, const std::vector<CoinbaseOutput> &outputs);

/// psi[k] names the input funding output k. Rejections: unresolvable
/// reference, double spend, non-bijective psi, size below two, mixed values,
/// missing secret key.
TxId append_join_tx(Ledger &ledger, WorldOracle &oracle, const std::vector<OutputRef> &input_refs,
                    const std::vector<GroupElement> &output_owners, const std::vector<std::uint32_t> &psi);

/// Signs the ring with the key owning ring_refs[true_index]. Rejections:
/// unresolvable reference, duplicate member, mixed values, double spend
/// (key image already on the ledger or the output already spent).
TxId append_ring_tx(Ledger &ledger, WorldOracle &oracle, const std::vector<OutputRef> &ring_refs,
                    std::uint32_t true_index, const GroupElement &output_owner);

}  // namespace cdk::ledger
