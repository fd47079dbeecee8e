#include "cdk/investigation.hpp"

#include <algorithm>
#include <deque>

namespace cdk::investigation {

namespace {

struct Visit {
    OutputRef out;
    std::size_t layer = 0;
    std::vector<TxId> path;
};

void add_terminal(SuspectSet &s, const EntityGraph &g, const Visit &v, bool truncated)
{
    s.terminals.insert(v.out);
    s.entities.insert(g.entity(v.out));
    if (truncated) s.truncated.insert(v.out);
    s.trace.emplace(v.out, v.path);
}

OutputRef ref_at(const Ledger &ledger, const TxId &tx, std::uint32_t position)
{
    return ledger::tx_refs(ledger.tx(tx)).at(position);
}

}  // namespace

SuspectSet backtrack_from(const Case &c, const std::vector<testimony::InquiryTarget> &targets, std::size_t max_depth)
{
    const EntityGraph &g = c.graph();
    const Ledger &ledger = g.ledger();
    const std::size_t layers = std::max<std::size_t>(max_depth, 1);

    SuspectSet s;
    std::set<OutputRef> seen;
    std::deque<Visit> queue;
    for (const auto &t : targets) {
        const OutputRef start{t.tx_id, t.index};
        ledger.resolve_ref(start);
        if (seen.insert(start).second) queue.push_back({start, 0, {}});
    }
    while (!queue.empty()) {
        Visit v = std::move(queue.front());
        queue.pop_front();
        if (g.is_source(v.out)) {
            add_terminal(s, g, v, false);
            continue;
        }
        if (v.layer == layers) {
            add_terminal(s, g, v, true);
            continue;
        }
        const TxId &tx = v.out.tx_id;
        for (auto k : c.funding_candidates(tx, v.out.index)) {
            const OutputRef in = ref_at(ledger, tx, k);
            s.reached.insert(in);
            if (!seen.insert(in).second) continue;
            auto path = v.path;
            path.push_back(tx);
            queue.push_back({in, v.layer + 1, std::move(path)});
        }
    }
    return s;
}

SuspectSet backtrack_suspects(const Case &c, std::size_t max_depth)
{
    if (c.direction() != testimony::Direction::backtrack) throw InvestigationError("not a backtracking case");
    return backtrack_from(c, c.roots(), max_depth);
}

SuspectSet forward_from(const Case &c, const std::vector<OutputRef> &origins, const ForwardOptions &options)
{
    const EntityGraph &g = c.graph();
    const Ledger &ledger = g.ledger();
    const std::size_t layers = std::max<std::size_t>(options.max_depth, 1);

    SuspectSet s;
    std::set<OutputRef> seen;
    std::deque<Visit> queue;
    for (const auto &o : origins) {
        ledger.resolve_ref(o);
        if (seen.insert(o).second) queue.push_back({o, 0, {}});
    }
    while (!queue.empty()) {
        Visit v = std::move(queue.front());
        queue.pop_front();
        const std::size_t born = *ledger.position(v.out.tx_id);
        bool stale = false;
        std::vector<OutputRef> next;
        std::vector<TxId> via;
        for (const auto &r : g.referenced_by(v.out)) {
            if (options.staleness_horizon != 0 && *ledger.position(r.tx) - born > options.staleness_horizon) {
                stale = true;
                continue;
            }
            for (auto j : c.funded_candidates(r.tx, r.position)) {
                next.push_back({r.tx, j});
                via.push_back(r.tx);
            }
        }
        if (next.empty()) {
            add_terminal(s, g, v, stale);
            continue;
        }
        if (v.layer == layers) {
            add_terminal(s, g, v, true);
            continue;
        }
        for (std::size_t k = 0; k < next.size(); ++k) {
            s.reached.insert(next[k]);
            if (!seen.insert(next[k]).second) continue;
            auto path = v.path;
            path.push_back(via[k]);
            queue.push_back({next[k], v.layer + 1, std::move(path)});
        }
    }
    for (const auto &o : origins) s.reached.erase(o);
    return s;
}

SuspectSet forward_reach(const Case &c, const ForwardOptions &options)
{
    if (c.direction() != testimony::Direction::forward) throw InvestigationError("not a forward-tracking case");
    std::vector<OutputRef> origins;
    for (const auto &t : c.roots()) origins.push_back(ref_at(c.graph().ledger(), t.tx_id, t.index));
    return forward_from(c, origins, options);
}

SuspectSet forward_reach(const Case &c, std::size_t max_depth)
{
    return forward_reach(c, ForwardOptions{max_depth, 0});
}

TaintMap taint_poison(const Ledger &ledger, const std::vector<OutputRef> &seeds, const TaintOptions &options)
{
    TaintMap taint;
    for (const auto &s : seeds) {
        if (!ledger.find_output(s)) throw InvestigationError("taint seed does not resolve: " + to_string(s));
    }
    const std::set<OutputRef> seed_set(seeds.begin(), seeds.end());
    auto tainted = [&](const OutputRef &r) {
        const auto it = taint.find(r);
        return it != taint.end() && it->second;
    };
    const Case *c = options.stop_at_resolved;

    // References only point backwards, so one pass in ledger order is the fixpoint.
    for (const auto &tx : ledger.transactions()) {
        const TxId &id = ledger::tx_id(tx);
        const auto refs = ledger::tx_refs(tx);
        const auto outs = ledger::tx_outputs(tx);
        const bool resolved = c && c->graph().mixin(id) && c->resolved(id);
        for (std::uint32_t j = 0; j < outs.size(); ++j) {
            bool t = seed_set.contains(outs[j].id);
            if (resolved) {
                for (auto k : c->funding_candidates(id, j)) t = t || tainted(refs[k]);
            } else {
                t = t || std::any_of(refs.begin(), refs.end(), tainted);
            }
            taint[outs[j].id] = t;
        }
    }
    return taint;
}

std::set<OutputRef> witness_anonymity_set(const Case &c, const OutputRef &o, const std::vector<OutputRef> &S,
                                          const std::optional<std::vector<OutputRef>> &prior_spend_ring)
{
    if (std::find(S.begin(), S.end(), o) == S.end()) throw InvestigationError("witness output is not in its group");
    if (c.disclosed(o)) return {o};
    std::set<OutputRef> out(S.begin(), S.end());
    if (prior_spend_ring) {
        const std::set<OutputRef> prior(prior_spend_ring->begin(), prior_spend_ring->end());
        std::erase_if(out, [&](const OutputRef &r) { return !prior.contains(r); });
    }
    return out;
}

std::optional<std::vector<OutputRef>> prior_spend_ring(const Ledger &ledger, const crypto::KeyImage &image)
{
    for (const auto &tx : ledger.transactions()) {
        if (const auto *r = std::get_if<ledger::RingTx>(&tx); r && r->key_image() == image) return r->ring;
    }
    return std::nullopt;
}

std::set<std::uint32_t> brute_force_join_suspects(std::size_t m, const std::vector<Claim> &claims, std::uint32_t t)
{
    if (m > 8) throw InvestigationError("brute force refuses m > 8");
    if (t >= m) throw InvestigationError("target out of range");
    std::vector<std::uint32_t> psi(m);
    for (std::uint32_t k = 0; k < m; ++k) psi[k] = k;
    std::set<std::uint32_t> out;
    do {
        bool ok = true;
        for (const auto &claim : claims) {
            if (const auto *r = std::get_if<testimony::JoinRelation>(&claim)) {
                ok = ok && psi[r->output] == r->input;
            } else if (const auto *x = std::get_if<testimony::JoinExclusion>(&claim)) {
                for (auto j : x->outputs)
                    for (auto i : x->inputs) ok = ok && psi[j] != i;
            }
        }
        if (ok) out.insert(psi[t]);
    } while (std::next_permutation(psi.begin(), psi.end()));
    return out;
}

}  // namespace cdk::investigation
