#pragma once

// The investigator's side: a funding graph over the public ledger, per-case
// constraints on each mixing transaction (which input may fund which
// output), suspect sets derived from them, poison taint and conflict
// detection. Everything here works from public data and verified facts.

#include "cdk/ledger.hpp"
#include "cdk/testimony.hpp"

#include <map>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

namespace cdk::investigation {

using ledger::Ledger;
using ledger::OutputRef;
using ledger::TxId;
using testimony::Claim;
using testimony::Fact;

class InvestigationError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Candidate funding edge: `from` may have paid for `to` through `tx`.
struct FundingEdge {
    OutputRef from;
    OutputRef to;
    TxId tx{};
    std::uint32_t input = 0;  // position of `from` among the tx inputs or ring members
    std::uint32_t output = 0;

    auto operator<=>(const FundingEdge &) const = default;
};

struct Reference {
    TxId tx{};
    std::uint32_t position = 0;

    auto operator<=>(const Reference &) const = default;
};

class EntityGraph {
public:
    /// Throws InvestigationError if validate_ledger reports anything.
    /// `clusters` are optional hints: each list of outputs is one entity.
    static EntityGraph build(const Ledger &ledger, const std::vector<std::vector<OutputRef>> &clusters = {});

    const Ledger &ledger() const noexcept { return *ledger_; }
    const std::vector<FundingEdge> &edges() const noexcept { return edges_; }
    std::size_t mixing_edge_count() const noexcept { return edges_.size(); }

    /// Transactions that list `ref` as an input or ring member, in ledger order.
    const std::vector<Reference> &referenced_by(const OutputRef &ref) const;
    /// Number of inputs (join) or ring members (ring); nullopt for coinbase.
    std::optional<std::size_t> mixin(const TxId &tx) const;
    bool is_source(const OutputRef &ref) const;  // a coinbase output
    /// Smallest output of the cluster containing `ref`.
    OutputRef entity(const OutputRef &ref) const;
    std::vector<OutputRef> sources() const;

private:
    const Ledger *ledger_ = nullptr;
    std::vector<FundingEdge> edges_;
    std::map<OutputRef, std::vector<Reference>> refs_;
    std::map<OutputRef, OutputRef> entity_;
};

EntityGraph build_entity_graph(const Ledger &ledger, const std::vector<std::vector<OutputRef>> &clusters = {});

struct Conflict {
    TxId tx{};
    std::optional<std::uint32_t> output;  // contested output, when there is one
    std::string kind;                     // "contested output", "contested input", "infeasible", "empty candidate set"
    std::vector<Fact> facts;
    std::vector<Digest> testimonies;  // sorted

    bool operator==(const Conflict &) const = default;
};

/// feasible[j][i]: psi(j) = i is still possible.
struct JoinConstraint {
    std::vector<std::vector<bool>> feasible;

    std::set<std::uint32_t> row(std::uint32_t output) const;
    std::set<std::uint32_t> column(std::uint32_t input) const;
    bool resolved() const;  // every row is a singleton
};

struct RingConstraint {
    std::set<std::uint32_t> candidates;
};

/// Constraint state of one investigation. Facts are kept in a sorted log and
/// each touched transaction is rebuilt from it, so the final state does not
/// depend on the order facts arrive in.
class Case {
public:
    /// Checks every target names a mixing transaction and an in-range index.
    Case(const EntityGraph &graph, testimony::Inquiry inquiry);

    /// Later rounds publish further inquiries under the same case.
    void add_inquiry(testimony::Inquiry inquiry);
    /// Points at a graph built over an extended ledger.
    void rebind(const EntityGraph &graph);

    /// Throws InvestigationError for a fact about a transaction that is not
    /// a mixing transaction of the graph, or with an index out of range.
    void apply(const Fact &fact);
    void apply(const std::vector<Fact> &facts);

    const EntityGraph &graph() const noexcept { return *graph_; }
    testimony::Direction direction() const noexcept { return inquiries_.front().direction; }
    const std::vector<testimony::Inquiry> &inquiries() const noexcept { return inquiries_; }
    const std::vector<testimony::InquiryTarget> &roots() const noexcept { return inquiries_.front().targets; }
    const std::set<Fact> &facts() const noexcept { return log_; }
    const std::vector<Conflict> &conflicts() const noexcept { return conflicts_; }

    /// Unconstrained transactions report everything feasible.
    JoinConstraint join(const TxId &tx) const;
    RingConstraint ring(const TxId &tx) const;
    /// Inputs (or ring positions) that may still fund `output` of `tx`.
    std::set<std::uint32_t> funding_candidates(const TxId &tx, std::uint32_t output) const;
    /// Outputs that input `position` of `tx` may still fund.
    std::set<std::uint32_t> funded_candidates(const TxId &tx, std::uint32_t position) const;
    bool resolved(const TxId &tx) const;

    bool disclosed(const OutputRef &ref) const { return disclosures_.contains(ref); }

private:
    void rebuild(const TxId &tx);
    std::size_t checked_mixin(const TxId &tx) const;

    const EntityGraph *graph_;
    std::vector<testimony::Inquiry> inquiries_;
    std::set<Fact> log_;
    std::map<TxId, JoinConstraint> joins_;
    std::map<TxId, RingConstraint> rings_;
    std::map<TxId, std::vector<Conflict>> conflicts_by_tx_;
    std::vector<Conflict> conflicts_;
    std::map<OutputRef, crypto::KeyImage> disclosures_;
};

Case open_case(const EntityGraph &graph, const testimony::Inquiry &inquiry);
void apply_fact(Case &c, const Fact &fact);
std::vector<Conflict> detect_conflicts(const Case &c);

struct SuspectSet {
    std::set<OutputRef> entities;   // entity keys of the terminals
    std::set<OutputRef> terminals;  // sources (backtrack) or frontier outputs (forward)
    std::set<OutputRef> truncated;  // terminals cut off by the depth or staleness bounds
    std::set<OutputRef> reached;    // every output visited, excluding the start
    std::map<OutputRef, std::vector<TxId>> trace;  // one shortest transaction path per terminal

    std::size_t size() const noexcept { return entities.size(); }
};

/// "max_depth" counts mixing layers; 0 behaves like 1 (the target's direct
/// candidates only). Non-source terminals at the bound are flagged truncated.
SuspectSet backtrack_suspects(const Case &c, std::size_t max_depth);

/// For each (tx, output) start, the same traversal.
SuspectSet backtrack_from(const Case &c, const std::vector<testimony::InquiryTarget> &targets, std::size_t max_depth);

struct ForwardOptions {
    std::size_t max_depth = 8;
    /// Ledger positions an output may stay unreferenced before it is treated
    /// as a frontier; 0 disables the rule.
    std::size_t staleness_horizon = 0;
};

/// Starts at the suspicious inputs named by the first inquiry.
SuspectSet forward_reach(const Case &c, const ForwardOptions &options);
SuspectSet forward_reach(const Case &c, std::size_t max_depth);
SuspectSet forward_from(const Case &c, const std::vector<OutputRef> &origins, const ForwardOptions &options);

using TaintMap = std::map<OutputRef, bool>;

struct TaintOptions {
    /// With a case: resolved transactions (all candidate sets singletons, our
    /// reading of "whitelisted") pass taint only along their known
    /// funding edges.
    const Case *stop_at_resolved = nullptr;
};

TaintMap taint_poison(const Ledger &ledger, const std::vector<OutputRef> &seeds, const TaintOptions &options = {});

/// The witness's output is hidden among S, among S and the ring of an earlier
/// spend of the same key, or not at all once its key image was disclosed.
std::set<OutputRef> witness_anonymity_set(const Case &c, const OutputRef &o, const std::vector<OutputRef> &S,
                                          const std::optional<std::vector<OutputRef>> &prior_spend_ring);

/// Ring of the ledger transaction carrying `image`, if any.
std::optional<std::vector<OutputRef>> prior_spend_ring(const Ledger &ledger, const crypto::KeyImage &image);

/// Independent reference: enumerate all m! permutations consistent with the
/// claims about `tx` and collect psi(t). Refuses m > 8.
std::set<std::uint32_t> brute_force_join_suspects(std::size_t m, const std::vector<Claim> &claims, std::uint32_t t);

}  // namespace cdk::investigation
