#include "cdk/investigation.hpp"

#include <algorithm>
#include <functional>

namespace cdk::investigation {

using testimony::JoinExclusion;
using testimony::JoinRelation;
using testimony::KeyImageDisclosure;
using testimony::RingExclusion;
using testimony::RingForwardExclusion;
using testimony::RingInclusion;

namespace {

using Matrix = std::vector<std::vector<bool>>;

Matrix all_true(std::size_t m) { return Matrix(m, std::vector<bool>(m, true)); }

// Kuhn's augmenting paths, with one row and one column optionally removed.
bool perfect_matching(const Matrix &f, std::size_t skip_row, std::size_t skip_col)
{
    const std::size_t m = f.size();
    constexpr std::size_t none = static_cast<std::size_t>(-1);
    std::vector<std::size_t> owner(m, none);
    std::vector<bool> seen;
    std::function<bool(std::size_t)> augment = [&](std::size_t j) {
        for (std::size_t i = 0; i < m; ++i) {
            if (i == skip_col || !f[j][i] || seen[i]) continue;
            seen[i] = true;
            if (owner[i] == none || augment(owner[i])) {
                owner[i] = j;
                return true;
            }
        }
        return false;
    };
    for (std::size_t j = 0; j < m; ++j) {
        if (j == skip_row) continue;
        seen.assign(m, false);
        if (!augment(j)) return false;
    }
    return true;
}

// Keeps an entry only if some perfect matching uses it. False when no
// perfect matching is left at all.
bool hall_prune(Matrix &f)
{
    constexpr std::size_t none = static_cast<std::size_t>(-1);
    if (!perfect_matching(f, none, none)) return false;
    Matrix keep = f;
    for (std::size_t j = 0; j < f.size(); ++j)
        for (std::size_t i = 0; i < f.size(); ++i)
            if (f[j][i]) keep[j][i] = perfect_matching(f, j, i);
    f = std::move(keep);
    return true;
}

void restrict_join(Matrix &f, const Claim &claim)
{
    const std::size_t m = f.size();
    if (const auto *r = std::get_if<JoinRelation>(&claim)) {
        for (std::size_t k = 0; k < m; ++k) {
            if (k != r->input) f[r->output][k] = false;
            if (k != r->output) f[k][r->input] = false;
        }
    } else if (const auto *x = std::get_if<JoinExclusion>(&claim)) {
        for (auto j : x->outputs)
            for (auto i : x->inputs) f[j][i] = false;
    }
}

void restrict_ring(std::set<std::uint32_t> &c, const Claim &claim)
{
    if (const auto *x = std::get_if<RingExclusion>(&claim)) {
        for (auto k : x->members) c.erase(k);
    } else if (const auto *x = std::get_if<RingForwardExclusion>(&claim)) {
        c.erase(x->member);
    } else if (const auto *x = std::get_if<RingInclusion>(&claim)) {
        std::set<std::uint32_t> keep;
        for (auto k : x->members)
            if (c.contains(k)) keep.insert(k);
        c = std::move(keep);
    }
}

void add_group(Conflict &c, const std::vector<Fact> &group)
{
    c.facts.insert(c.facts.end(), group.begin(), group.end());
    if (!group.empty()) c.testimonies.push_back(group.front().provenance);
}

void normalize(Conflict &c)
{
    std::sort(c.facts.begin(), c.facts.end());
    std::sort(c.testimonies.begin(), c.testimonies.end());
    c.testimonies.erase(std::unique(c.testimonies.begin(), c.testimonies.end()), c.testimonies.end());
}

}  // namespace

std::set<std::uint32_t> JoinConstraint::row(std::uint32_t output) const
{
    std::set<std::uint32_t> out;
    for (std::uint32_t i = 0; i < feasible.at(output).size(); ++i)
        if (feasible[output][i]) out.insert(i);
    return out;
}

std::set<std::uint32_t> JoinConstraint::column(std::uint32_t input) const
{
    std::set<std::uint32_t> out;
    for (std::uint32_t j = 0; j < feasible.size(); ++j)
        if (feasible[j].at(input)) out.insert(j);
    return out;
}

bool JoinConstraint::resolved() const
{
    return std::all_of(feasible.begin(), feasible.end(),
                       [](const auto &row) { return std::count(row.begin(), row.end(), true) == 1; });
}

Case::Case(const EntityGraph &graph, testimony::Inquiry inquiry) : graph_(&graph)
{
    add_inquiry(std::move(inquiry));
}

void Case::add_inquiry(testimony::Inquiry inquiry)
{
    if (!inquiries_.empty() && inquiry.direction != direction())
        throw InvestigationError("inquiry direction differs from the case");
    for (const auto &target : inquiry.targets) {
        const std::size_t m = checked_mixin(target.tx_id);
        const bool ring = graph_->ledger().find_ring(target.tx_id) != nullptr;
        const std::size_t bound = (inquiry.direction == testimony::Direction::backtrack && ring) ? 1 : m;
        if (target.index >= bound)
            throw InvestigationError("target index " + std::to_string(target.index) + " out of range");
    }
    inquiries_.push_back(std::move(inquiry));
}

void Case::rebind(const EntityGraph &graph) { graph_ = &graph; }

std::size_t Case::checked_mixin(const TxId &tx) const
{
    const auto m = graph_->mixin(tx);
    if (!m) throw InvestigationError("not a mixing transaction: " + to_hex(tx));
    return *m;
}

void Case::apply(const Fact &fact)
{
    if (const auto *d = std::get_if<KeyImageDisclosure>(&fact.claim)) {
        disclosures_[d->output] = d->image;
        log_.insert(fact);
        return;
    }
    const TxId tx = *testimony::claim_tx(fact.claim);
    const std::size_t m = checked_mixin(tx);
    const bool is_join = graph_->ledger().find_join(tx) != nullptr;
    const bool join_claim =
        std::holds_alternative<JoinRelation>(fact.claim) || std::holds_alternative<JoinExclusion>(fact.claim);
    if (is_join != join_claim) throw InvestigationError("fact does not match the transaction type");

    auto in_range = [m](const std::vector<std::uint32_t> &v) {
        return std::all_of(v.begin(), v.end(), [m](auto k) { return k < m; });
    };
    bool ok = true;
    if (const auto *r = std::get_if<JoinRelation>(&fact.claim)) ok = r->output < m && r->input < m;
    if (const auto *x = std::get_if<JoinExclusion>(&fact.claim)) ok = in_range(x->outputs) && in_range(x->inputs);
    if (const auto *x = std::get_if<RingExclusion>(&fact.claim)) ok = in_range(x->members);
    if (const auto *x = std::get_if<RingInclusion>(&fact.claim)) ok = in_range(x->members);
    if (const auto *x = std::get_if<RingForwardExclusion>(&fact.claim)) ok = x->member < m;
    if (!ok) throw InvestigationError("fact index out of range: " + testimony::describe(fact.claim));

    if (log_.insert(fact).second) rebuild(tx);
}

void Case::apply(const std::vector<Fact> &facts)
{
    for (const auto &f : facts) apply(f);
}

void Case::rebuild(const TxId &tx)
{
    // Facts about tx grouped by testimony; std::map gives digest order.
    std::map<Digest, std::vector<Fact>> groups;
    for (const auto &f : log_) {
        if (testimony::claim_tx(f.claim) == tx) groups[f.provenance].push_back(f);
    }
    const std::size_t m = checked_mixin(tx);
    std::vector<Conflict> found;

    if (graph_->ledger().find_join(tx)) {
        // Two testimonies pairing the same output (or input) differently
        // contradict each other outright; neither is applied.
        std::map<std::uint32_t, std::map<std::uint32_t, std::vector<Fact>>> by_output, by_input;
        for (const auto &[_, group] : groups)
            for (const auto &f : group)
                if (const auto *r = std::get_if<JoinRelation>(&f.claim)) {
                    by_output[r->output][r->input].push_back(f);
                    by_input[r->input][r->output].push_back(f);
                }
        std::set<Digest> quarantined;
        auto contest = [&](const auto &index, const char *kind, bool is_output) {
            for (const auto &[key, claims] : index) {
                if (claims.size() < 2) continue;
                Conflict c{tx, is_output ? std::optional<std::uint32_t>(key) : std::nullopt, kind, {}, {}};
                for (const auto &[_, fs] : claims)
                    for (const auto &f : fs) {
                        c.facts.push_back(f);
                        c.testimonies.push_back(f.provenance);
                        quarantined.insert(f.provenance);
                    }
                normalize(c);
                found.push_back(std::move(c));
            }
        };
        contest(by_output, "contested output", true);
        contest(by_input, "contested input", false);

        Matrix f = all_true(m);
        std::vector<const std::vector<Fact> *> applied;
        for (const auto &[digest, group] : groups) {
            if (quarantined.contains(digest)) continue;
            Matrix next = f;
            for (const auto &fact : group) restrict_join(next, fact.claim);
            if (hall_prune(next)) {
                f = std::move(next);
                applied.push_back(&group);
                continue;
            }
            Conflict c{tx, std::nullopt, "infeasible", {}, {}};
            add_group(c, group);
            for (const auto *prior : applied) add_group(c, *prior);
            if (group.size() == 1)
                if (const auto *r = std::get_if<JoinRelation>(&group.front().claim)) c.output = r->output;
            normalize(c);
            found.push_back(std::move(c));
        }
        joins_[tx] = JoinConstraint{std::move(f)};
    } else {
        std::set<std::uint32_t> candidates;
        for (std::uint32_t k = 0; k < m; ++k) candidates.insert(k);
        std::vector<const std::vector<Fact> *> applied;
        for (const auto &[_, group] : groups) {
            auto next = candidates;
            for (const auto &fact : group) restrict_ring(next, fact.claim);
            if (!next.empty()) {
                candidates = std::move(next);
                applied.push_back(&group);
                continue;
            }
            Conflict c{tx, std::nullopt, "empty candidate set", {}, {}};
            add_group(c, group);
            for (const auto *prior : applied) add_group(c, *prior);
            normalize(c);
            found.push_back(std::move(c));
        }
        rings_[tx] = RingConstraint{std::move(candidates)};
    }

    if (found.empty()) {
        conflicts_by_tx_.erase(tx);
    } else {
        conflicts_by_tx_[tx] = std::move(found);
    }
    conflicts_.clear();
    for (const auto &[_, cs] : conflicts_by_tx_) conflicts_.insert(conflicts_.end(), cs.begin(), cs.end());
}

JoinConstraint Case::join(const TxId &tx) const
{
    if (const auto it = joins_.find(tx); it != joins_.end()) return it->second;
    if (!graph_->ledger().find_join(tx)) throw InvestigationError("not a join transaction: " + to_hex(tx));
    return JoinConstraint{all_true(checked_mixin(tx))};
}

RingConstraint Case::ring(const TxId &tx) const
{
    if (const auto it = rings_.find(tx); it != rings_.end()) return it->second;
    if (!graph_->ledger().find_ring(tx)) throw InvestigationError("not a ring transaction: " + to_hex(tx));
    RingConstraint r;
    for (std::uint32_t k = 0; k < checked_mixin(tx); ++k) r.candidates.insert(k);
    return r;
}

std::set<std::uint32_t> Case::funding_candidates(const TxId &tx, std::uint32_t output) const
{
    if (graph_->ledger().find_join(tx)) return join(tx).row(output);
    if (output != 0) throw InvestigationError("ring transactions have a single output");
    return ring(tx).candidates;
}

std::set<std::uint32_t> Case::funded_candidates(const TxId &tx, std::uint32_t position) const
{
    if (graph_->ledger().find_join(tx)) return join(tx).column(position);
    if (ring(tx).candidates.contains(position)) return {0};
    return {};
}

bool Case::resolved(const TxId &tx) const
{
    if (graph_->ledger().find_join(tx)) return join(tx).resolved();
    if (graph_->ledger().find_ring(tx)) return ring(tx).candidates.size() == 1;
    return true;
}

Case open_case(const EntityGraph &graph, const testimony::Inquiry &inquiry) { return Case(graph, inquiry); }

void apply_fact(Case &c, const Fact &fact) { c.apply(fact); }

std::vector<Conflict> detect_conflicts(const Case &c) { return c.conflicts(); }

}  // namespace cdk::investigation
