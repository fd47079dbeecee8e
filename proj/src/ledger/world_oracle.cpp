#include "cdk/world_oracle.hpp"

#include <algorithm>
#include <set>

namespace cdk::ledger {

void WorldOracle::register_key(const crypto::KeyPair &kp, EntityId owner)
{
    key_owner_[kp.pk] = owner;
    secret_keys_[kp.pk] = kp.sk;
}

std::optional<crypto::Scalar> WorldOracle::secret_key(const GroupElement &pk) const
{
    const auto it = secret_keys_.find(pk);
    if (it == secret_keys_.end()) {
        return std::nullopt;
    }
    return it->second;
}

std::optional<EntityId> WorldOracle::owner(const GroupElement &pk) const
{
    const auto it = key_owner_.find(pk);
    if (it == key_owner_.end()) {
        return std::nullopt;
    }
    return it->second;
}

void WorldOracle::record_psi(const TxId &tx, std::vector<std::uint32_t> psi)
{
    psi_[tx] = std::move(psi);
}

void WorldOracle::record_sigma(const TxId &tx, std::uint32_t sigma)
{
    sigma_[tx] = sigma;
}

const std::vector<std::uint32_t> *WorldOracle::psi(const TxId &tx) const
{
    const auto it = psi_.find(tx);
    return it == psi_.end() ? nullptr : &it->second;
}

std::optional<std::uint32_t> WorldOracle::sigma(const TxId &tx) const
{
    const auto it = sigma_.find(tx);
    if (it == sigma_.end()) {
        return std::nullopt;
    }
    return it->second;
}

void WorldOracle::mark_spent(const OutputRef &ref, const TxId &spender)
{
    spent_[ref] = spender;
}

bool WorldOracle::is_spent(const OutputRef &ref) const
{
    return spent_.contains(ref);
}

std::optional<TxId> WorldOracle::spender(const OutputRef &ref) const
{
    const auto it = spent_.find(ref);
    if (it == spent_.end()) {
        return std::nullopt;
    }
    return it->second;
}

TxId append_coinbase(Ledger &ledger, const std::vector<CoinbaseOutput> &outputs)
{
    if (outputs.empty()) {
        throw LedgerRejection("coinbase without outputs");
    }
    CoinbaseTx tx;
    for (const auto &o : outputs) {
        tx.outputs.push_back(Output{{}, o.owner_pk, o.value});
    }
    seal(tx);
    if (ledger.position(tx.id)) {
        throw LedgerRejection("duplicate transaction id");
    }
    const TxId id = tx.id;
    ledger.append_unchecked(std::move(tx));
    return id;
}

namespace {

std::uint64_t uniform_value(const Ledger &ledger, const std::vector<OutputRef> &refs)
{
    std::set<std::uint64_t> values;
    for (const auto &ref : refs) {
        const auto out = ledger.find_output(ref);
        if (!out) {
            throw LedgerRejection("unresolvable reference " + to_string(ref));
        }
        values.insert(out->value);
    }
    if (values.size() != 1) {
        throw LedgerRejection("mixing transactions require uniform values");
    }
    return *values.begin();
}

bool spent_by_join(const Ledger &ledger, const OutputRef &ref)
{
    for (const auto &tx : ledger.transactions()) {
        if (const auto *join = std::get_if<JoinTx>(&tx)) {
            if (std::find(join->inputs.begin(), join->inputs.end(), ref) != join->inputs.end()) {
                return true;
            }
        }
    }
    return false;
}

}  // namespace

TxId append_join_tx(Ledger &ledger, WorldOracle &oracle, const std::vector<OutputRef> &input_refs,
                    const std::vector<GroupElement> &output_owners, const std::vector<std::uint32_t> &psi)
{
    const std::size_t m = input_refs.size();
    if (m < 2 || output_owners.size() != m || psi.size() != m) {
        throw LedgerRejection("join transaction requires m = n = |psi| >= 2");
    }
    std::vector<bool> hit(m, false);
    for (const auto p : psi) {
        if (p >= m || hit[p]) {
            throw LedgerRejection("psi is not a bijection");
        }
        hit[p] = true;
    }
    if (std::set<OutputRef>(input_refs.begin(), input_refs.end()).size() != m) {
        throw LedgerRejection("double spend: repeated input");
    }
    const std::uint64_t value = uniform_value(ledger, input_refs);
    for (const auto &ref : input_refs) {
        if (oracle.is_spent(ref) || spent_by_join(ledger, ref)) {
            throw LedgerRejection("double spend: " + to_string(ref));
        }
    }

    JoinTx tx;
    tx.inputs = input_refs;
    for (const auto &owner : output_owners) {
        tx.outputs.push_back(Output{{}, owner, value});
    }
    seal(tx);
    if (ledger.position(tx.id)) {
        throw LedgerRejection("duplicate transaction id");
    }
    const Bytes msg = canonical_bytes(TxType::join, tx.inputs, tx.outputs);
    for (const auto &ref : input_refs) {
        const auto sk = oracle.secret_key(ledger.resolve_ref(ref).owner_pk);
        if (!sk) {
            throw LedgerRejection("missing secret key for input " + to_string(ref));
        }
        tx.input_sigs.push_back(crypto::sign(*sk, msg));
    }

    const TxId id = tx.id;
    for (const auto &ref : input_refs) {
        oracle.mark_spent(ref, id);
    }
    oracle.record_psi(id, psi);
    ledger.append_unchecked(std::move(tx));
    return id;
}

TxId append_ring_tx(Ledger &ledger, WorldOracle &oracle, const std::vector<OutputRef> &ring_refs,
                    std::uint32_t true_index, const GroupElement &output_owner)
{
    if (ring_refs.empty() || true_index >= ring_refs.size()) {
        throw LedgerRejection("true index outside the ring");
    }
    if (std::set<OutputRef>(ring_refs.begin(), ring_refs.end()).size() != ring_refs.size()) {
        throw LedgerRejection("ring members must be distinct");
    }
    const std::uint64_t value = uniform_value(ledger, ring_refs);
    const OutputRef &spent = ring_refs[true_index];
    const GroupElement spent_pk = ledger.resolve_ref(spent).owner_pk;
    const auto sk = oracle.secret_key(spent_pk);
    if (!sk) {
        throw LedgerRejection("missing secret key for true input " + to_string(spent));
    }
    const crypto::KeyPair kp{*sk, spent_pk};
    if (ledger.key_image_seen(crypto::key_image(kp)) || oracle.is_spent(spent) || spent_by_join(ledger, spent)) {
        throw LedgerRejection("double spend: " + to_string(spent));
    }

    RingTx tx;
    tx.ring = ring_refs;
    tx.output = Output{{}, output_owner, value};
    seal(tx);
    if (ledger.position(tx.id)) {
        throw LedgerRejection("duplicate transaction id");
    }
    const Bytes msg = canonical_bytes(TxType::ring, tx.ring, {tx.output});
    tx.ring_sig = crypto::ring_sign(ledger.owner_keys(tx.ring), true_index, *sk, msg);

    const TxId id = tx.id;
    oracle.mark_spent(spent, id);
    oracle.record_sigma(id, true_index);
    ledger.append_unchecked(std::move(tx));
    return id;
}

}  // namespace cdk::ledger
