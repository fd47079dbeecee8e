#include "cdk/testimony.hpp"

#include <algorithm>

namespace cdk::testimony {

namespace {

enum class Tag : std::uint8_t {
    join_individual = 0x11,
    join_group = 0x12,
    ring_phantom = 0x13,
    ring_group = 0x14,
    inquiry = 0x21,
};

void put_indices(ByteWriter &w, const std::vector<std::uint32_t> &indices)
{
    w.list(indices, [](ByteWriter &e, std::uint32_t v) { e.u32(v); });
}

std::vector<std::uint32_t> get_indices(ByteReader &r)
{
    return r.list([](ByteReader &e) { return e.u32(); });
}

void put_sigs(ByteWriter &w, const std::vector<Signature> &sigs)
{
    w.list(sigs, [](ByteWriter &e, const Signature &s) { e.raw(s.encode()); });
}

std::vector<Signature> get_sigs(ByteReader &r)
{
    return r.list([](ByteReader &e) { return Signature::decode(e.raw(e.remaining())); });
}

void encode_phantom_body(ByteWriter &w, const RingPhantomTestimony &t)
{
    w.field(t.case_id);
    w.field(t.target_tx_id);
    w.field_u32(static_cast<std::uint32_t>(t.claimed_role));
    w.list(t.phantom.ring, ledger::encode_ref);
    crypto::encode_point(w, t.phantom.output.owner_pk);
    w.field_u64(t.phantom.output.value);
    w.field(t.phantom.ring_sig.encode());
}

RingPhantomTestimony decode_phantom_body(ByteReader &r)
{
    RingPhantomTestimony t;
    t.case_id = r.field_string();
    t.target_tx_id = r.field_array<32>();
    const std::uint32_t role = r.field_u32();
    if (role < static_cast<std::uint32_t>(Role::ring_backtrack_individual) ||
        role > static_cast<std::uint32_t>(Role::ring_forward)) {
        throw DecodeError("phantom testimony with a non-ring role");
    }
    t.claimed_role = static_cast<Role>(role);
    t.phantom.ring = r.list(ledger::decode_ref);
    t.phantom.output.owner_pk = crypto::decode_point(r);
    t.phantom.output.value = r.field_u64();
    t.phantom.ring_sig = crypto::RingSignature::decode(r.field());
    return t;
}

}  // namespace

std::string_view to_string(Direction d)
{
    return d == Direction::backtrack ? "backtrack" : "forward";
}

std::string_view to_string(Role role)
{
    switch (role) {
    case Role::join_individual:
        return "join-individual";
    case Role::join_group:
        return "join-group";
    case Role::ring_backtrack_individual:
        return "ring-backtrack-individual";
    case Role::ring_backtrack_group:
        return "ring-backtrack-group";
    case Role::ring_forward:
        return "ring-forward";
    }
    return "unknown";
}

Digest canonical_challenge(const std::string &case_id, const std::vector<TxId> &tx_ids, Role role,
                           std::vector<std::vector<std::uint32_t>> index_sets)
{
    for (auto &set : index_sets) {
        std::sort(set.begin(), set.end());
        set.erase(std::unique(set.begin(), set.end()), set.end());
    }
    ByteWriter w;
    w.raw(as_bytes(kChallengeTag));
    w.field(case_id);
    w.list(tx_ids, [](ByteWriter &e, const TxId &id) { e.raw(id); });
    w.byte(static_cast<std::uint8_t>(role));
    w.list(index_sets, put_indices);
    return sha256(w.bytes());
}

Bytes Inquiry::signed_bytes() const
{
    ByteWriter w;
    w.byte(static_cast<std::uint8_t>(Tag::inquiry));
    w.field(case_id);
    w.field_u32(static_cast<std::uint32_t>(direction));
    w.list(targets, [](ByteWriter &e, const InquiryTarget &t) {
        e.field(t.tx_id);
        e.field_u32(t.index);
    });
    w.field(narrative);
    crypto::encode_point(w, lea_pk);
    return w.take();
}

Bytes Inquiry::encode() const
{
    ByteWriter w;
    w.raw(signed_bytes());
    w.field(lea_sig.encode());
    return w.take();
}

Inquiry Inquiry::decode(std::span<const std::uint8_t> bytes)
{
    ByteReader r(bytes);
    if (r.byte() != static_cast<std::uint8_t>(Tag::inquiry)) {
        throw DecodeError("not an inquiry");
    }
    Inquiry inq;
    inq.case_id = r.field_string();
    const std::uint32_t direction = r.field_u32();
    if (direction > 1) {
        throw DecodeError("unknown inquiry direction");
    }
    inq.direction = static_cast<Direction>(direction);
    inq.targets = r.list([](ByteReader &e) {
        InquiryTarget t;
        t.tx_id = e.field_array<32>();
        t.index = e.field_u32();
        return t;
    });
    inq.narrative = r.field_string();
    inq.lea_pk = crypto::decode_point(r);
    inq.lea_sig = Signature::decode(r.field());
    r.expect_end();
    return inq;
}

std::optional<std::uint32_t> Inquiry::index_for(const TxId &tx) const
{
    for (const auto &t : targets) {
        if (t.tx_id == tx) {
            return t.index;
        }
    }
    return std::nullopt;
}

Inquiry make_inquiry(std::string case_id, Direction direction, std::vector<InquiryTarget> targets,
                     std::string narrative, const crypto::KeyPair &lea)
{
    Inquiry inq;
    inq.case_id = std::move(case_id);
    inq.direction = direction;
    inq.targets = std::move(targets);
    inq.narrative = std::move(narrative);
    inq.lea_pk = lea.pk;
    inq.lea_sig = crypto::sign(lea.sk, inq.signed_bytes());
    return inq;
}

bool verify_inquiry(const Inquiry &inquiry, const GroupElement &published_lea_pk)
{
    return inquiry.lea_pk == published_lea_pk && crypto::verify(inquiry.lea_pk, inquiry.signed_bytes(), inquiry.lea_sig);
}

Bytes encode_testimony(const Testimony &t)
{
    ByteWriter w;
    if (const auto *ji = std::get_if<JoinIndividualTestimony>(&t)) {
        w.byte(static_cast<std::uint8_t>(Tag::join_individual));
        w.field(ji->case_id);
        w.field(ji->tx_id);
        w.field_u32(ji->input_index);
        w.field_u32(ji->output_index);
        w.field(ji->sig_input.encode());
        w.field(ji->sig_output.encode());
    } else if (const auto *jg = std::get_if<JoinGroupTestimony>(&t)) {
        w.byte(static_cast<std::uint8_t>(Tag::join_group));
        w.field(jg->case_id);
        w.list(jg->entries, [](ByteWriter &e, const JoinGroupEntry &entry) {
            e.field(entry.tx_id);
            put_indices(e, entry.inputs);
            put_indices(e, entry.outputs);
            put_sigs(e, entry.input_sigs);
            put_sigs(e, entry.output_sigs);
        });
    } else if (const auto *rp = std::get_if<RingPhantomTestimony>(&t)) {
        w.byte(static_cast<std::uint8_t>(Tag::ring_phantom));
        encode_phantom_body(w, *rp);
    } else {
        const auto &bundle = std::get<RingGroupBundle>(t);
        w.byte(static_cast<std::uint8_t>(Tag::ring_group));
        w.list(bundle.members, encode_phantom_body);
    }
    return w.take();
}

Testimony decode_testimony(std::span<const std::uint8_t> bytes)
{
    ByteReader r(bytes);
    const std::uint8_t tag = r.byte();
    Testimony out;
    switch (static_cast<Tag>(tag)) {
    case Tag::join_individual: {
        JoinIndividualTestimony t;
        t.case_id = r.field_string();
        t.tx_id = r.field_array<32>();
        t.input_index = r.field_u32();
        t.output_index = r.field_u32();
        t.sig_input = Signature::decode(r.field());
        t.sig_output = Signature::decode(r.field());
        out = std::move(t);
        break;
    }
    case Tag::join_group: {
        JoinGroupTestimony t;
        t.case_id = r.field_string();
        t.entries = r.list([](ByteReader &e) {
            JoinGroupEntry entry;
            entry.tx_id = e.field_array<32>();
            entry.inputs = get_indices(e);
            entry.outputs = get_indices(e);
            entry.input_sigs = get_sigs(e);
            entry.output_sigs = get_sigs(e);
            return entry;
        });
        out = std::move(t);
        break;
    }
    case Tag::ring_phantom:
        out = decode_phantom_body(r);
        break;
    case Tag::ring_group: {
        RingGroupBundle bundle;
        bundle.members = r.list(decode_phantom_body);
        out = std::move(bundle);
        break;
    }
    default:
        throw DecodeError("unknown testimony type tag");
    }
    r.expect_end();
    return out;
}

Digest testimony_digest(const Testimony &t)
{
    return sha256(encode_testimony(t));
}

RingGroupBundle make_ring_group_bundle(std::vector<RingPhantomTestimony> members)
{
    std::vector<std::pair<Bytes, RingPhantomTestimony>> keyed;
    for (auto &m : members) {
        keyed.emplace_back(encode_testimony(m), std::move(m));
    }
    std::sort(keyed.begin(), keyed.end(), [](const auto &a, const auto &b) { return a.first < b.first; });
    RingGroupBundle bundle;
    for (auto &k : keyed) {
        bundle.members.push_back(std::move(k.second));
    }
    return bundle;
}

}  // namespace cdk::testimony
