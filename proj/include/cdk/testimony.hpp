#pragma once

// Inquiries published by the investigator and the testimonies witnesses send
// back: challenge signatures for join-type transactions and phantom ring
// transactions for ring-type transactions. Verification turns a testimony
// into Facts, or rejects it with a reason.

#include "cdk/crypto.hpp"
#include "cdk/ledger.hpp"

#include <optional>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

namespace cdk::testimony {

using crypto::GroupElement;
using crypto::KeyImage;
using crypto::Scalar;
using crypto::Signature;
using ledger::Ledger;
using ledger::OutputRef;
using ledger::TxId;

inline constexpr std::string_view kChallengeTag = "CDK/v1/testimony";

enum class Direction : std::uint8_t { backtrack = 0, forward = 1 };

std::string_view to_string(Direction d);

/// For backtracking `index` is the targeted output t; for forward tracking it
/// is the suspicious input s.
struct InquiryTarget {
    TxId tx_id{};
    std::uint32_t index = 0;

    auto operator<=>(const InquiryTarget &) const = default;
};

struct Inquiry {
    std::string case_id;
    Direction direction = Direction::backtrack;
    std::vector<InquiryTarget> targets;
    std::string narrative;
    GroupElement lea_pk;
    Signature lea_sig;

    /// Everything except lea_sig; the bytes the investigator signs.
    Bytes signed_bytes() const;
    Bytes encode() const;
    static Inquiry decode(std::span<const std::uint8_t> bytes);

    std::optional<std::uint32_t> index_for(const TxId &tx) const;
};

Inquiry make_inquiry(std::string case_id, Direction direction, std::vector<InquiryTarget> targets,
                     std::string narrative, const crypto::KeyPair &lea);
/// Checks the signature and that it was made by the published key.
bool verify_inquiry(const Inquiry &inquiry, const GroupElement &published_lea_pk);

enum class Role : std::uint8_t {
    join_individual = 0x01,
    join_group = 0x02,
    ring_backtrack_individual = 0x03,
    ring_backtrack_group = 0x04,
    ring_forward = 0x05,
};

std::string_view to_string(Role role);

/// SHA-256 over the domain tag and the length-prefixed fields. Index sets are
/// sorted and deduplicated before encoding.
Digest canonical_challenge(const std::string &case_id, const std::vector<TxId> &tx_ids, Role role,
                           std::vector<std::vector<std::uint32_t>> index_sets);

struct JoinIndividualTestimony {
    std::string case_id;
    TxId tx_id{};
    std::uint32_t input_index = 0;
    std::uint32_t output_index = 0;
    Signature sig_input;
    Signature sig_output;
};

struct JoinGroupEntry {
    TxId tx_id{};
    std::vector<std::uint32_t> inputs;   // sorted
    std::vector<std::uint32_t> outputs;  // sorted
    std::vector<Signature> input_sigs;   // aligned with inputs
    std::vector<Signature> output_sigs;  // aligned with outputs
};

/// No pairing between inputs and outputs is encoded anywhere.
struct JoinGroupTestimony {
    std::string case_id;
    std::vector<JoinGroupEntry> entries;  // sorted by tx id
};

/// A ring-transaction-shaped record that can never be included on chain: its
/// output is worth one unit more than any referenced output.
struct PhantomTx {
    std::vector<OutputRef> ring;  // canonical order: position in the target ring
    ledger::Output output;
    crypto::RingSignature ring_sig;
};

struct RingPhantomTestimony {
    std::string case_id;
    TxId target_tx_id{};
    Role claimed_role = Role::ring_backtrack_individual;
    PhantomTx phantom;
};

/// The |S| phantoms of a provably-spent-set testimony, sorted by encoding.
struct RingGroupBundle {
    std::vector<RingPhantomTestimony> members;
};

using Testimony = std::variant<JoinIndividualTestimony, JoinGroupTestimony, RingPhantomTestimony, RingGroupBundle>;

/// type tag byte || canonical field encoding.
Bytes encode_testimony(const Testimony &t);
Testimony decode_testimony(std::span<const std::uint8_t> bytes);
Digest testimony_digest(const Testimony &t);

RingGroupBundle make_ring_group_bundle(std::vector<RingPhantomTestimony> members);

// Facts use zero-based input and output positions.
struct JoinRelation {  // psi(output) = input
    TxId tx{};
    std::uint32_t output = 0;
    std::uint32_t input = 0;
    auto operator<=>(const JoinRelation &) const = default;
};
struct JoinExclusion {  // psi(j) not in inputs, for every j in outputs
    TxId tx{};
    std::vector<std::uint32_t> outputs;
    std::vector<std::uint32_t> inputs;
    auto operator<=>(const JoinExclusion &) const = default;
};
struct RingExclusion {  // sigma not in members
    TxId tx{};
    std::vector<std::uint32_t> members;
    auto operator<=>(const RingExclusion &) const = default;
};
struct RingForwardExclusion {  // sigma != member
    TxId tx{};
    std::uint32_t member = 0;
    auto operator<=>(const RingForwardExclusion &) const = default;
};
struct RingInclusion {  // sigma in members; a singleton solves the transaction
    TxId tx{};
    std::vector<std::uint32_t> members;
    auto operator<=>(const RingInclusion &) const = default;
};
struct KeyImageDisclosure {
    OutputRef output;
    KeyImage image;
    auto operator<=>(const KeyImageDisclosure &) const = default;
};

using Claim = std::variant<JoinRelation, JoinExclusion, RingExclusion, RingForwardExclusion, RingInclusion,
                           KeyImageDisclosure>;

struct Fact {
    Claim claim;
    Digest provenance{};  // digest of the verified testimony

    auto operator<=>(const Fact &) const = default;
};

/// Transaction a claim constrains; nullopt for key-image disclosures.
std::optional<TxId> claim_tx(const Claim &claim);
/// Locale-independent ASCII rendering, e.g. "psi(1)=0" or "sigma!=2".
std::string describe(const Claim &claim);

struct Verdict {
    bool accepted = false;
    std::string reason;  // empty when accepted
    std::vector<Fact> facts;

    explicit operator bool() const noexcept { return accepted; }
};

/// Raised by the make_* constructors when a witness asks for something it
/// cannot or must not sign.
class TestimonyError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

struct JoinMember {
    TxId tx_id{};
    std::uint32_t input_index = 0;
    std::uint32_t output_index = 0;
    Scalar sk_input;
    Scalar sk_output;
};

JoinIndividualTestimony make_join_individual(const Ledger &ledger, const Inquiry &inquiry, const ledger::JoinTx &tx,
                                             std::uint32_t i, std::uint32_t j, const Scalar &sk_in,
                                             const Scalar &sk_out);
Verdict verify_join_individual(const Ledger &ledger, const Inquiry &inquiry, const JoinIndividualTestimony &tst);

JoinGroupTestimony make_join_group(const Ledger &ledger, const Inquiry &inquiry, const std::vector<JoinMember> &members);
Verdict verify_join_group(const Ledger &ledger, const Inquiry &inquiry, const JoinGroupTestimony &tst);

/// declared_ring = {o} for an individual testimony, the group's set S otherwise.
RingPhantomTestimony make_ring_backtrack_phantom(const Ledger &ledger, const Inquiry &inquiry,
                                                 const ledger::RingTx &target, const OutputRef &own_ref,
                                                 const Scalar &sk, const std::vector<OutputRef> &declared_ring);
Verdict verify_ring_backtrack_individual(const Ledger &ledger, const Inquiry &inquiry, const RingPhantomTestimony &tst);
Verdict verify_ring_group(const Ledger &ledger, const Inquiry &inquiry, const RingGroupBundle &bundle);

RingPhantomTestimony make_ring_forward_phantom(const Ledger &ledger, const Inquiry &inquiry,
                                               const ledger::RingTx &target, std::uint32_t s, const Scalar &sk_true,
                                               const OutputRef &true_ref);
Verdict verify_ring_forward(const Ledger &ledger, const Inquiry &inquiry, const RingPhantomTestimony &tst);

/// Dispatches on the testimony type (and, for single phantoms, the claimed role).
Verdict verify_testimony(const Ledger &ledger, const Inquiry &inquiry, const Testimony &tst);

}  // namespace cdk::testimony
