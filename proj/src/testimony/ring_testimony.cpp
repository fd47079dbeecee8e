#include "cdk/testimony.hpp"

#include <algorithm>
#include <set>

namespace cdk::testimony {

namespace {

Verdict reject(std::string reason)
{
    return Verdict{false, std::move(reason), {}};
}

// Positions of `refs` inside the target ring, or nullopt if one is foreign.
std::optional<std::vector<std::uint32_t>> positions_in(const ledger::RingTx &target, const std::vector<OutputRef> &refs)
{
    std::vector<std::uint32_t> out;
    for (const auto &ref : refs) {
        const auto it = std::find(target.ring.begin(), target.ring.end(), ref);
        if (it == target.ring.end()) {
            return std::nullopt;
        }
        out.push_back(static_cast<std::uint32_t>(it - target.ring.begin()));
    }
    return out;
}

Bytes phantom_message(const PhantomTx &phantom, const Digest &challenge)
{
    Bytes msg = ledger::canonical_bytes(ledger::TxType::ring, phantom.ring, {phantom.output});
    msg.insert(msg.end(), challenge.begin(), challenge.end());
    return msg;
}

std::uint64_t max_referenced_value(const Ledger &ledger, const std::vector<OutputRef> &refs)
{
    std::uint64_t best = 0;
    for (const auto &ref : refs) {
        best = std::max(best, ledger.resolve_ref(ref).value);
    }
    return best;
}

// Builds and signs a phantom over `ring` (already in target order).
PhantomTx sign_phantom(const Ledger &ledger, const std::vector<OutputRef> &ring, std::size_t secret_index,
                       const Scalar &sk, const Digest &challenge)
{
    PhantomTx phantom;
    phantom.ring = ring;
    ByteWriter burn;
    burn.field(std::string_view("phantom-owner"));
    burn.field(challenge);
    phantom.output.owner_pk = crypto::hash_to_group(burn.bytes());
    phantom.output.value = max_referenced_value(ledger, ring) + 1;
    phantom.ring_sig = crypto::ring_sign(ledger.owner_keys(ring), secret_index, sk, phantom_message(phantom, challenge));
    return phantom;
}

struct PhantomCheck {
    const ledger::RingTx *target = nullptr;
    std::vector<std::uint32_t> positions;
    std::string failure;
};

// Checks shared by every phantom: targeted ring transaction, declared role,
// canonical ring drawn from the target, inclusion-invalid output, signature.
PhantomCheck check_phantom(const Ledger &ledger, const Inquiry &inquiry, const RingPhantomTestimony &tst,
                           Role expected_role, Direction expected_direction)
{
    PhantomCheck check;
    if (inquiry.direction != expected_direction) {
        check.failure = "wrong direction";
        return check;
    }
    if (!inquiry.index_for(tst.target_tx_id)) {
        check.failure = "not a target";
        return check;
    }
    check.target = ledger.find_ring(tst.target_tx_id);
    if (check.target == nullptr) {
        check.failure = "unknown transaction";
        return check;
    }
    if (tst.claimed_role != expected_role) {
        check.failure = "wrong role";
        return check;
    }
    const auto positions = positions_in(*check.target, tst.phantom.ring);
    if (tst.phantom.ring.empty() || !positions) {
        check.failure = "foreign reference";
        return check;
    }
    if (std::adjacent_find(positions->begin(), positions->end(), std::greater_equal<>()) != positions->end()) {
        check.failure = "wrong ring shape";
        return check;
    }
    check.positions = *positions;
    if (tst.phantom.output.value <= max_referenced_value(ledger, tst.phantom.ring)) {
        check.failure = "not inclusion-invalid";
        return check;
    }
    const Digest challenge =
        canonical_challenge(inquiry.case_id, {tst.target_tx_id}, tst.claimed_role, {check.positions});
    if (!crypto::ring_verify(ledger.owner_keys(tst.phantom.ring), phantom_message(tst.phantom, challenge),
                             tst.phantom.ring_sig)) {
        check.failure = "challenge mismatch";
    }
    return check;
}

}  // namespace

RingPhantomTestimony make_ring_backtrack_phantom(const Ledger &ledger, const Inquiry &inquiry,
                                                 const ledger::RingTx &target, const OutputRef &own_ref,
                                                 const Scalar &sk, const std::vector<OutputRef> &declared_ring)
{
    if (inquiry.direction != Direction::backtrack || !inquiry.index_for(target.id)) {
        throw TestimonyError("transaction is not a backtracking target of the inquiry");
    }
    const std::set<OutputRef> declared(declared_ring.begin(), declared_ring.end());
    if (declared.size() != declared_ring.size() || declared.empty()) {
        throw TestimonyError("declared ring must be a nonempty set");
    }
    if (!declared.contains(own_ref)) {
        throw TestimonyError("own output is not in the declared ring");
    }
    auto positions = positions_in(target, declared_ring);
    if (!positions) {
        throw TestimonyError("foreign reference: declared ring is not a subset of the target ring");
    }
    if (crypto::base_mul(sk) != ledger.resolve_ref(own_ref).owner_pk) {
        throw TestimonyError("secret key does not own " + ledger::to_string(own_ref));
    }
    std::sort(positions->begin(), positions->end());
    std::vector<OutputRef> ring;
    std::size_t secret_index = 0;
    for (const auto p : *positions) {
        if (target.ring[p] == own_ref) {
            secret_index = ring.size();
        }
        ring.push_back(target.ring[p]);
    }
    const Role role = ring.size() == 1 ? Role::ring_backtrack_individual : Role::ring_backtrack_group;
    const Digest challenge = canonical_challenge(inquiry.case_id, {target.id}, role, {*positions});

    RingPhantomTestimony t;
    t.case_id = inquiry.case_id;
    t.target_tx_id = target.id;
    t.claimed_role = role;
    t.phantom = sign_phantom(ledger, ring, secret_index, sk, challenge);
    return t;
}

Verdict verify_ring_backtrack_individual(const Ledger &ledger, const Inquiry &inquiry, const RingPhantomTestimony &tst)
{
    if (tst.phantom.ring.size() != 1) {
        return reject("wrong ring shape");
    }
    const PhantomCheck check =
        check_phantom(ledger, inquiry, tst, Role::ring_backtrack_individual, Direction::backtrack);
    if (!check.failure.empty()) {
        return reject(check.failure);
    }
    const std::uint32_t i = check.positions.front();
    const Digest provenance = testimony_digest(tst);
    Verdict v{true, {}, {}};
    if (tst.phantom.ring_sig.key_image == check.target->key_image()) {
        // The phantom spends the same output as the target: sigma = i.
        v.facts.push_back(Fact{RingInclusion{check.target->id, {i}}, provenance});
    } else {
        v.facts.push_back(Fact{RingExclusion{check.target->id, {i}}, provenance});
    }
    v.facts.push_back(Fact{KeyImageDisclosure{tst.phantom.ring.front(), tst.phantom.ring_sig.key_image}, provenance});
    return v;
}

Verdict verify_ring_group(const Ledger &ledger, const Inquiry &inquiry, const RingGroupBundle &bundle)
{
    if (bundle.members.empty()) {
        return reject("cardinality");
    }
    const auto &first = bundle.members.front();
    for (const auto &m : bundle.members) {
        if (m.target_tx_id != first.target_tx_id || m.phantom.ring != first.phantom.ring) {
            return reject("wrong ring shape");
        }
    }
    if (bundle.members.size() != first.phantom.ring.size()) {
        return reject("cardinality");
    }

    const ledger::RingTx *target = nullptr;
    std::vector<std::uint32_t> positions;
    std::set<KeyImage> images;
    bool equivocation = false;
    for (const auto &m : bundle.members) {
        const PhantomCheck check = check_phantom(ledger, inquiry, m, Role::ring_backtrack_group, Direction::backtrack);
        if (!check.failure.empty()) {
            return reject(check.failure);
        }
        target = check.target;
        positions = check.positions;
        equivocation |= !images.insert(m.phantom.ring_sig.key_image).second;
    }
    if (equivocation) {
        return reject("equivocation");
    }

    const Digest provenance = testimony_digest(make_ring_group_bundle(bundle.members));
    Verdict v{true, {}, {}};
    if (images.contains(target->key_image())) {
        // A member spent the target's true input: sigma lies inside S.
        v.facts.push_back(Fact{RingInclusion{target->id, positions}, provenance});
    } else {
        v.facts.push_back(Fact{RingExclusion{target->id, positions}, provenance});
    }
    return v;
}

RingPhantomTestimony make_ring_forward_phantom(const Ledger &ledger, const Inquiry &inquiry,
                                               const ledger::RingTx &target, std::uint32_t s, const Scalar &sk_true,
                                               const OutputRef &true_ref)
{
    if (inquiry.direction != Direction::forward || inquiry.index_for(target.id) != s) {
        throw TestimonyError("transaction and input are not a forward-tracking target of the inquiry");
    }
    if (s >= target.size()) {
        throw TestimonyError("suspicious input index out of range");
    }
    const auto own = positions_in(target, {true_ref});
    if (!own) {
        throw TestimonyError("foreign reference: own output is not in the target ring");
    }
    if (own->front() == s) {
        throw TestimonyError("cannot exculpate: the suspicious input is the witness's own input");
    }
    if (crypto::base_mul(sk_true) != ledger.resolve_ref(true_ref).owner_pk) {
        throw TestimonyError("secret key does not own " + ledger::to_string(true_ref));
    }
    std::vector<OutputRef> ring;
    std::vector<std::uint32_t> positions;
    std::size_t secret_index = 0;
    for (std::uint32_t p = 0; p < target.size(); ++p) {
        if (p == s) {
            continue;
        }
        if (p == own->front()) {
            secret_index = ring.size();
        }
        ring.push_back(target.ring[p]);
        positions.push_back(p);
    }
    const Digest challenge = canonical_challenge(inquiry.case_id, {target.id}, Role::ring_forward, {positions});

    RingPhantomTestimony t;
    t.case_id = inquiry.case_id;
    t.target_tx_id = target.id;
    t.claimed_role = Role::ring_forward;
    t.phantom = sign_phantom(ledger, ring, secret_index, sk_true, challenge);
    return t;
}

Verdict verify_ring_forward(const Ledger &ledger, const Inquiry &inquiry, const RingPhantomTestimony &tst)
{
    const PhantomCheck check = check_phantom(ledger, inquiry, tst, Role::ring_forward, Direction::forward);
    if (!check.failure.empty()) {
        return reject(check.failure);
    }
    const std::uint32_t s = *inquiry.index_for(tst.target_tx_id);
    std::vector<std::uint32_t> expected;
    for (std::uint32_t p = 0; p < check.target->size(); ++p) {
        if (p != s) {
            expected.push_back(p);
        }
    }
    if (check.positions != expected) {
        return reject("wrong ring shape");
    }
    if (tst.phantom.ring_sig.key_image != check.target->key_image()) {
        return reject("not the spender");
    }
    return Verdict{true, {}, {Fact{RingForwardExclusion{check.target->id, s}, testimony_digest(tst)}}};
}

Verdict verify_testimony(const Ledger &ledger, const Inquiry &inquiry, const Testimony &tst)
{
    if (const auto *t = std::get_if<JoinIndividualTestimony>(&tst)) {
        return verify_join_individual(ledger, inquiry, *t);
    }
    if (const auto *t = std::get_if<JoinGroupTestimony>(&tst)) {
        return verify_join_group(ledger, inquiry, *t);
    }
    if (const auto *t = std::get_if<RingGroupBundle>(&tst)) {
        return verify_ring_group(ledger, inquiry, *t);
    }
    const auto &phantom = std::get<RingPhantomTestimony>(tst);
    switch (phantom.claimed_role) {
    case Role::ring_backtrack_individual:
        return verify_ring_backtrack_individual(ledger, inquiry, phantom);
    case Role::ring_forward:
        return verify_ring_forward(ledger, inquiry, phantom);
    default:
        return reject("cardinality");
    }
}

}  // namespace cdk::testimony
