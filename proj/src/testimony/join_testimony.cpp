#include "cdk/testimony.hpp"

#include <algorithm>
#include <map>
#include <set>

namespace cdk::testimony {

namespace {

Verdict reject(std::string reason)
{
    return Verdict{false, std::move(reason), {}};
}

bool owns(const Scalar &sk, const GroupElement &pk)
{
    return !sk.is_zero() && crypto::base_mul(sk) == pk;
}

bool strictly_sorted(const std::vector<std::uint32_t> &v)
{
    return std::adjacent_find(v.begin(), v.end(), std::greater_equal<>()) == v.end();
}

Digest group_challenge(const std::string &case_id, const std::vector<JoinGroupEntry> &entries)
{
    std::vector<TxId> ids;
    std::vector<std::vector<std::uint32_t>> sets;
    for (const auto &e : entries) {
        ids.push_back(e.tx_id);
        sets.push_back(e.inputs);
        sets.push_back(e.outputs);
    }
    return canonical_challenge(case_id, ids, Role::join_group, std::move(sets));
}

}  // namespace

JoinIndividualTestimony make_join_individual(const Ledger &ledger, const Inquiry &inquiry, const ledger::JoinTx &tx,
                                             std::uint32_t i, std::uint32_t j, const Scalar &sk_in,
                                             const Scalar &sk_out)
{
    const auto target = inquiry.index_for(tx.id);
    if (!target) {
        throw TestimonyError("transaction is not targeted by the inquiry");
    }
    if (i >= tx.size() || j >= tx.size()) {
        throw TestimonyError("input or output index out of range");
    }
    if (inquiry.direction == Direction::backtrack && j == *target) {
        throw TestimonyError("refused: a witness cannot testify about the target output");
    }
    if (inquiry.direction == Direction::forward && i == *target) {
        throw TestimonyError("refused: a witness cannot testify about the suspicious input");
    }
    if (!owns(sk_in, ledger.resolve_ref(tx.inputs[i]).owner_pk)) {
        throw TestimonyError("input key does not own input " + std::to_string(i));
    }
    if (!owns(sk_out, tx.outputs[j].owner_pk)) {
        throw TestimonyError("output key does not own output " + std::to_string(j));
    }
    const Digest challenge = canonical_challenge(inquiry.case_id, {tx.id}, Role::join_individual, {{i}, {j}});
    JoinIndividualTestimony t;
    t.case_id = inquiry.case_id;
    t.tx_id = tx.id;
    t.input_index = i;
    t.output_index = j;
    t.sig_input = crypto::sign(sk_in, challenge);
    t.sig_output = crypto::sign(sk_out, challenge);
    return t;
}

Verdict verify_join_individual(const Ledger &ledger, const Inquiry &inquiry, const JoinIndividualTestimony &tst)
{
    const auto target = inquiry.index_for(tst.tx_id);
    if (!target) {
        return reject("not a target");
    }
    const ledger::JoinTx *tx = ledger.find_join(tst.tx_id);
    if (tx == nullptr) {
        return reject("unknown transaction");
    }
    const std::uint32_t i = tst.input_index;
    const std::uint32_t j = tst.output_index;
    if (i >= tx->size() || j >= tx->size()) {
        return reject("index out of range");
    }
    if (inquiry.direction == Direction::backtrack && j == *target) {
        return reject("target output claimed");
    }
    if (inquiry.direction == Direction::forward && i == *target) {
        return reject("suspicious input claimed");
    }
    const Digest challenge = canonical_challenge(inquiry.case_id, {tx->id}, Role::join_individual, {{i}, {j}});
    const GroupElement in_pk = ledger.resolve_ref(tx->inputs[i]).owner_pk;
    if (!crypto::verify(in_pk, challenge, tst.sig_input) ||
        !crypto::verify(tx->outputs[j].owner_pk, challenge, tst.sig_output)) {
        return reject("challenge mismatch");
    }

    const Digest provenance = testimony_digest(tst);
    Verdict v{true, {}, {}};
    v.facts.push_back(Fact{JoinRelation{tx->id, j, i}, provenance});
    if (inquiry.direction == Direction::backtrack) {
        v.facts.push_back(Fact{JoinExclusion{tx->id, {*target}, {i}}, provenance});
    } else {
        v.facts.push_back(Fact{JoinExclusion{tx->id, {j}, {*target}}, provenance});
    }
    return v;
}

JoinGroupTestimony make_join_group(const Ledger &ledger, const Inquiry &inquiry, const std::vector<JoinMember> &members)
{
    if (members.empty()) {
        throw TestimonyError("group testimony without members");
    }
    struct Keys {
        std::map<std::uint32_t, Scalar> inputs;
        std::map<std::uint32_t, Scalar> outputs;
    };
    std::map<TxId, Keys> by_tx;
    for (const auto &m : members) {
        const ledger::JoinTx *tx = ledger.find_join(m.tx_id);
        const auto target = inquiry.index_for(m.tx_id);
        if (tx == nullptr || !target) {
            throw TestimonyError("member references a transaction the inquiry does not target");
        }
        const std::string who = "member (input " + std::to_string(m.input_index) + ", output " +
                                std::to_string(m.output_index) + ")";
        if (m.input_index >= tx->size() || m.output_index >= tx->size()) {
            throw TestimonyError(who + ": index out of range");
        }
        if (inquiry.direction == Direction::backtrack && m.output_index == *target) {
            throw TestimonyError("refused: " + who + " claims the target output");
        }
        if (inquiry.direction == Direction::forward && m.input_index == *target) {
            throw TestimonyError("refused: " + who + " claims the suspicious input");
        }
        if (!owns(m.sk_input, ledger.resolve_ref(tx->inputs[m.input_index]).owner_pk)) {
            throw TestimonyError(who + ": missing input key");
        }
        if (!owns(m.sk_output, tx->outputs[m.output_index].owner_pk)) {
            throw TestimonyError(who + ": missing output key");
        }
        auto &keys = by_tx[m.tx_id];
        if (!keys.inputs.emplace(m.input_index, m.sk_input).second ||
            !keys.outputs.emplace(m.output_index, m.sk_output).second) {
            throw TestimonyError(who + ": index declared twice");
        }
    }

    JoinGroupTestimony t;
    t.case_id = inquiry.case_id;
    for (const auto &[tx_id, keys] : by_tx) {
        JoinGroupEntry e;
        e.tx_id = tx_id;
        for (const auto &kv : keys.inputs) e.inputs.push_back(kv.first);
        for (const auto &kv : keys.outputs) e.outputs.push_back(kv.first);
        t.entries.push_back(std::move(e));
    }
    // The pairing between inputs and outputs is dropped here: only the sorted
    // index sets enter the challenge and the message.
    const Digest challenge = group_challenge(t.case_id, t.entries);
    for (auto &e : t.entries) {
        const auto &keys = by_tx.at(e.tx_id);
        for (const auto &kv : keys.inputs) e.input_sigs.push_back(crypto::sign(kv.second, challenge));
        for (const auto &kv : keys.outputs) e.output_sigs.push_back(crypto::sign(kv.second, challenge));
    }
    return t;
}

Verdict verify_join_group(const Ledger &ledger, const Inquiry &inquiry, const JoinGroupTestimony &tst)
{
    if (tst.entries.empty()) {
        return reject("cardinality");
    }
    std::set<TxId> seen;
    for (const auto &e : tst.entries) {
        if (!seen.insert(e.tx_id).second) {
            return reject("malformed: transaction listed twice");
        }
        if (!inquiry.index_for(e.tx_id)) {
            return reject("not a target");
        }
        const ledger::JoinTx *tx = ledger.find_join(e.tx_id);
        if (tx == nullptr) {
            return reject("unknown transaction");
        }
        if (e.inputs.empty() || e.inputs.size() != e.outputs.size() || e.input_sigs.size() != e.inputs.size() ||
            e.output_sigs.size() != e.outputs.size()) {
            return reject("cardinality");
        }
        if (!strictly_sorted(e.inputs) || !strictly_sorted(e.outputs)) {
            return reject("malformed: index sets not canonical");
        }
        if (e.inputs.back() >= tx->size() || e.outputs.back() >= tx->size()) {
            return reject("index out of range");
        }
        const std::uint32_t target = *inquiry.index_for(e.tx_id);
        if (inquiry.direction == Direction::backtrack &&
            std::binary_search(e.outputs.begin(), e.outputs.end(), target)) {
            return reject("target output claimed");
        }
        if (inquiry.direction == Direction::forward && std::binary_search(e.inputs.begin(), e.inputs.end(), target)) {
            return reject("suspicious input claimed");
        }
    }

    const Digest challenge = group_challenge(inquiry.case_id, tst.entries);
    for (const auto &e : tst.entries) {
        const ledger::JoinTx &tx = *ledger.find_join(e.tx_id);
        for (std::size_t k = 0; k < e.inputs.size(); ++k) {
            if (!crypto::verify(ledger.resolve_ref(tx.inputs[e.inputs[k]]).owner_pk, challenge, e.input_sigs[k])) {
                return reject("challenge mismatch");
            }
        }
        for (std::size_t k = 0; k < e.outputs.size(); ++k) {
            if (!crypto::verify(tx.outputs[e.outputs[k]].owner_pk, challenge, e.output_sigs[k])) {
                return reject("challenge mismatch");
            }
        }
    }

    const Digest provenance = testimony_digest(tst);
    Verdict v{true, {}, {}};
    for (const auto &e : tst.entries) {
        const std::uint32_t target = *inquiry.index_for(e.tx_id);
        if (inquiry.direction == Direction::backtrack) {
            v.facts.push_back(Fact{JoinExclusion{e.tx_id, {target}, e.inputs}, provenance});
        } else {
            v.facts.push_back(Fact{JoinExclusion{e.tx_id, e.outputs, {target}}, provenance});
        }
    }
    return v;
}

}  // namespace cdk::testimony
