#include "cdk/ledger.hpp"

#include <algorithm>

namespace cdk::ledger {

namespace {

constexpr std::string_view kLedgerMagic = "CDK/v1/ledger";

void encode_output(ByteWriter &out, const Output &o)
{
    crypto::encode_point(out, o.owner_pk);
    out.field_u64(o.value);
}

Output decode_output(ByteReader &in)
{
    Output o;
    o.owner_pk = crypto::decode_point(in);
    o.value = in.field_u64();
    return o;
}

void assign_ids(const TxId &id, std::vector<Output> &outputs)
{
    for (std::size_t k = 0; k < outputs.size(); ++k) {
        outputs[k].id = OutputRef{id, static_cast<std::uint32_t>(k)};
    }
}

}  // namespace

std::string to_string(const OutputRef &ref)
{
    return to_hex(ref.tx_id).substr(0, 12) + ":" + std::to_string(ref.index);
}

TxType tx_type(const Transaction &tx)
{
    return static_cast<TxType>(tx.index());
}

const TxId &tx_id(const Transaction &tx)
{
    return std::visit([](const auto &t) -> const TxId & { return t.id; }, tx);
}

std::vector<OutputRef> tx_refs(const Transaction &tx)
{
    if (const auto *join = std::get_if<JoinTx>(&tx)) {
        return join->inputs;
    }
    if (const auto *ring = std::get_if<RingTx>(&tx)) {
        return ring->ring;
    }
    return {};
}

std::vector<Output> tx_outputs(const Transaction &tx)
{
    if (const auto *ring = std::get_if<RingTx>(&tx)) {
        return {ring->output};
    }
    if (const auto *join = std::get_if<JoinTx>(&tx)) {
        return join->outputs;
    }
    return std::get<CoinbaseTx>(tx).outputs;
}

void encode_ref(ByteWriter &out, const OutputRef &ref)
{
    out.field(ref.tx_id);
    out.field_u32(ref.index);
}

OutputRef decode_ref(ByteReader &in)
{
    OutputRef ref;
    ref.tx_id = in.field_array<32>();
    ref.index = in.field_u32();
    return ref;
}

Bytes canonical_bytes(TxType type, const std::vector<OutputRef> &refs, const std::vector<Output> &outputs)
{
    ByteWriter w;
    w.byte(static_cast<std::uint8_t>(type));
    w.list(refs, encode_ref);
    w.list(outputs, encode_output);
    return w.take();
}

TxId compute_tx_id(TxType type, const std::vector<OutputRef> &refs, const std::vector<Output> &outputs)
{
    return sha256(canonical_bytes(type, refs, outputs));
}

void seal(CoinbaseTx &tx)
{
    tx.id = compute_tx_id(TxType::coinbase, {}, tx.outputs);
    assign_ids(tx.id, tx.outputs);
}

void seal(JoinTx &tx)
{
    tx.id = compute_tx_id(TxType::join, tx.inputs, tx.outputs);
    assign_ids(tx.id, tx.outputs);
}

void seal(RingTx &tx)
{
    tx.id = compute_tx_id(TxType::ring, tx.ring, {tx.output});
    tx.output.id = OutputRef{tx.id, 0};
}

Bytes encode_transaction(const Transaction &tx)
{
    ByteWriter w;
    w.raw(canonical_bytes(tx_type(tx), tx_refs(tx), tx_outputs(tx)));
    if (const auto *join = std::get_if<JoinTx>(&tx)) {
        w.list(join->input_sigs, [](ByteWriter &e, const crypto::Signature &s) { e.raw(s.encode()); });
    } else if (const auto *ring = std::get_if<RingTx>(&tx)) {
        w.field(ring->ring_sig.encode());
    } else {
        w.field(Bytes{});
    }
    return w.take();
}

Transaction decode_transaction(std::span<const std::uint8_t> bytes)
{
    ByteReader r(bytes);
    const std::uint8_t tag = r.byte();
    auto refs = r.list(decode_ref);
    auto outputs = r.list(decode_output);
    Transaction result;
    switch (tag) {
    case static_cast<std::uint8_t>(TxType::coinbase): {
        if (!refs.empty() || !r.field().empty()) {
            throw DecodeError("coinbase transaction with inputs or authorization");
        }
        CoinbaseTx tx;
        tx.outputs = std::move(outputs);
        seal(tx);
        result = std::move(tx);
        break;
    }
    case static_cast<std::uint8_t>(TxType::join): {
        JoinTx tx;
        tx.inputs = std::move(refs);
        tx.outputs = std::move(outputs);
        tx.input_sigs = r.list([](ByteReader &e) { return crypto::Signature::decode(e.raw(e.remaining())); });
        seal(tx);
        result = std::move(tx);
        break;
    }
    case static_cast<std::uint8_t>(TxType::ring): {
        if (outputs.size() != 1) {
            throw DecodeError("ring transaction must have exactly one output");
        }
        RingTx tx;
        tx.ring = std::move(refs);
        tx.output = outputs.front();
        tx.ring_sig = crypto::RingSignature::decode(r.field());
        seal(tx);
        result = std::move(tx);
        break;
    }
    default:
        throw DecodeError("unknown transaction type tag");
    }
    r.expect_end();
    return result;
}

Ledger Ledger::from_transactions(std::vector<Transaction> txs)
{
    Ledger ledger;
    for (auto &tx : txs) {
        ledger.append_unchecked(std::move(tx));
    }
    return ledger;
}

void Ledger::append_unchecked(Transaction tx)
{
    const std::size_t pos = txs_.size();
    positions_.emplace(tx_id(tx), pos);
    for (const auto &o : tx_outputs(tx)) {
        output_index_.emplace(o.id, o);
    }
    if (const auto *ring = std::get_if<RingTx>(&tx)) {
        key_images_.insert(ring->key_image());
    }
    txs_.push_back(std::move(tx));
}

const Output &Ledger::resolve_ref(const OutputRef &ref) const
{
    const auto it = output_index_.find(ref);
    if (it == output_index_.end()) {
        throw NotFound("output not found: " + to_string(ref));
    }
    return it->second;
}

std::optional<Output> Ledger::find_output(const OutputRef &ref) const
{
    const auto it = output_index_.find(ref);
    if (it == output_index_.end()) {
        return std::nullopt;
    }
    return it->second;
}

std::optional<std::size_t> Ledger::position(const TxId &id) const
{
    const auto it = positions_.find(id);
    if (it == positions_.end()) {
        return std::nullopt;
    }
    return it->second;
}

const Transaction &Ledger::tx(const TxId &id) const
{
    const auto pos = position(id);
    if (!pos) {
        throw NotFound("transaction not found: " + to_hex(id).substr(0, 12));
    }
    return txs_[*pos];
}

const JoinTx *Ledger::find_join(const TxId &id) const
{
    const auto pos = position(id);
    return pos ? std::get_if<JoinTx>(&txs_[*pos]) : nullptr;
}

const RingTx *Ledger::find_ring(const TxId &id) const
{
    const auto pos = position(id);
    return pos ? std::get_if<RingTx>(&txs_[*pos]) : nullptr;
}

bool Ledger::key_image_seen(const KeyImage &image) const
{
    return key_images_.contains(image);
}

std::vector<GroupElement> Ledger::owner_keys(const std::vector<OutputRef> &refs) const
{
    std::vector<GroupElement> keys;
    keys.reserve(refs.size());
    for (const auto &ref : refs) {
        keys.push_back(resolve_ref(ref).owner_pk);
    }
    return keys;
}

Bytes Ledger::serialize() const
{
    ByteWriter w;
    w.field(kLedgerMagic);
    w.list(txs_, [](ByteWriter &e, const Transaction &tx) { e.raw(encode_transaction(tx)); });
    return w.take();
}

Ledger Ledger::deserialize(std::span<const std::uint8_t> bytes)
{
    ByteReader r(bytes);
    if (r.field_string() != kLedgerMagic) {
        throw DecodeError("not a CDK/v1 ledger");
    }
    auto txs = r.list([](ByteReader &e) { return decode_transaction(e.raw(e.remaining())); });
    r.expect_end();
    return from_transactions(std::move(txs));
}

std::vector<Violation> validate_ledger(const Ledger &ledger)
{
    std::vector<Violation> violations;
    std::map<TxId, std::size_t> seen;
    std::set<KeyImage> images;
    std::set<OutputRef> join_spent;

    const auto &txs = ledger.transactions();
    for (std::size_t pos = 0; pos < txs.size(); ++pos) {
        const Transaction &tx = txs[pos];
        auto report = [&](std::string kind, std::string detail) {
            violations.push_back(Violation{std::move(kind), pos, std::move(detail)});
        };
        if (!seen.emplace(tx_id(tx), pos).second) {
            report("duplicate transaction", to_hex(tx_id(tx)).substr(0, 12));
        }

        const auto refs = tx_refs(tx);
        bool resolvable = true;
        for (const auto &ref : refs) {
            const auto producer = seen.find(ref.tx_id);
            if (producer == seen.end() || producer->second >= pos) {
                resolvable = false;
                const auto later = ledger.position(ref.tx_id);
                if (later && *later >= pos) {
                    report("ordering", "reference to a later transaction " + to_string(ref));
                } else {
                    report("unresolvable", "unknown reference " + to_string(ref));
                }
            } else if (!ledger.find_output(ref)) {
                resolvable = false;
                report("unresolvable", "output index out of range " + to_string(ref));
            }
        }

        if (const auto *join = std::get_if<JoinTx>(&tx)) {
            if (join->inputs.size() < 2 || join->outputs.size() != join->inputs.size()) {
                report("arity", "join transaction must have m = n >= 2");
            }
            for (const auto &ref : join->inputs) {
                if (!join_spent.insert(ref).second) {
                    report("double spend", "output spent twice by join inputs " + to_string(ref));
                }
            }
            if (join->input_sigs.size() != join->inputs.size()) {
                report("signature", "one signature per join input required");
            } else if (resolvable) {
                const Bytes msg = canonical_bytes(TxType::join, join->inputs, join->outputs);
                std::multiset<std::uint64_t> in_values, out_values;
                for (std::size_t k = 0; k < join->inputs.size(); ++k) {
                    const Output &spent = ledger.resolve_ref(join->inputs[k]);
                    in_values.insert(spent.value);
                    if (!crypto::verify(spent.owner_pk, msg, join->input_sigs[k])) {
                        report("signature", "invalid input signature at index " + std::to_string(k));
                    }
                }
                for (const auto &o : join->outputs) {
                    out_values.insert(o.value);
                }
                if (in_values != out_values) {
                    report("value", "join input and output values differ");
                }
            }
        } else if (const auto *ring = std::get_if<RingTx>(&tx)) {
            const std::set<OutputRef> distinct(ring->ring.begin(), ring->ring.end());
            if (ring->ring.empty() || distinct.size() != ring->ring.size()) {
                report("ring members", "ring must be nonempty with distinct members");
            }
            if (!images.insert(ring->key_image()).second) {
                report("key image reuse", "key image already present on the ledger");
            }
            if (resolvable) {
                const Bytes msg = canonical_bytes(TxType::ring, ring->ring, {ring->output});
                if (!crypto::ring_verify(ledger.owner_keys(ring->ring), msg, ring->ring_sig)) {
                    report("signature", "ring signature does not verify");
                }
                std::set<std::uint64_t> values;
                for (const auto &ref : ring->ring) {
                    values.insert(ledger.resolve_ref(ref).value);
                }
                if (values.size() != 1 || *values.begin() != ring->output.value) {
                    report("value", "ring members and output must share one value");
                }
            }
        }
    }
    return violations;
}

}  // namespace cdk::ledger
