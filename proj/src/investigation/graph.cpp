#include "cdk/investigation.hpp"

#include <algorithm>

namespace cdk::investigation {

namespace {

struct UnionFind {
    std::map<OutputRef, OutputRef> parent;

    OutputRef find(const OutputRef &x)
    {
        OutputRef root = x;
        while (parent.at(root) != root) root = parent.at(root);
        for (OutputRef cur = x; cur != root;) {
            OutputRef next = parent.at(cur);
            parent[cur] = root;
            cur = next;
        }
        return root;
    }

    void unite(const OutputRef &a, const OutputRef &b)
    {
        const OutputRef ra = find(a), rb = find(b);
        if (ra != rb) parent[std::max(ra, rb)] = std::min(ra, rb);
    }
};

}  // namespace

EntityGraph EntityGraph::build(const Ledger &ledger, const std::vector<std::vector<OutputRef>> &clusters)
{
    const auto violations = ledger::validate_ledger(ledger);
    if (!violations.empty()) {
        const auto &v = violations.front();
        throw InvestigationError("invalid ledger: " + v.kind + " at position " + std::to_string(v.position) +
                                 (v.detail.empty() ? "" : " (" + v.detail + ")"));
    }

    EntityGraph g;
    g.ledger_ = &ledger;
    UnionFind uf;
    for (const auto &tx : ledger.transactions()) {
        const TxId &id = ledger::tx_id(tx);
        for (const auto &out : ledger::tx_outputs(tx)) uf.parent[out.id] = out.id;

        const auto refs = ledger::tx_refs(tx);
        for (std::uint32_t p = 0; p < refs.size(); ++p) g.refs_[refs[p]].push_back({id, p});

        if (const auto *join = std::get_if<ledger::JoinTx>(&tx)) {
            for (std::uint32_t i = 0; i < join->inputs.size(); ++i)
                for (std::uint32_t j = 0; j < join->outputs.size(); ++j)
                    g.edges_.push_back({join->inputs[i], join->outputs[j].id, id, i, j});
        } else if (const auto *ring = std::get_if<ledger::RingTx>(&tx)) {
            for (std::uint32_t k = 0; k < ring->ring.size(); ++k)
                g.edges_.push_back({ring->ring[k], ring->output.id, id, k, 0});
        }
    }

    // A hint may only name outputs of the ledger.
    for (const auto &cluster : clusters) {
        for (const auto &ref : cluster) {
            if (!uf.parent.contains(ref)) throw InvestigationError("cluster hint names unknown output " + to_string(ref));
            uf.unite(cluster.front(), ref);
        }
    }
    for (const auto &[ref, _] : uf.parent) g.entity_[ref] = uf.find(ref);
    return g;
}

EntityGraph build_entity_graph(const Ledger &ledger, const std::vector<std::vector<OutputRef>> &clusters)
{
    return EntityGraph::build(ledger, clusters);
}

const std::vector<Reference> &EntityGraph::referenced_by(const OutputRef &ref) const
{
    static const std::vector<Reference> none;
    const auto it = refs_.find(ref);
    return it == refs_.end() ? none : it->second;
}

std::optional<std::size_t> EntityGraph::mixin(const TxId &tx) const
{
    if (const auto *j = ledger_->find_join(tx)) return j->size();
    if (const auto *r = ledger_->find_ring(tx)) return r->size();
    return std::nullopt;
}

bool EntityGraph::is_source(const OutputRef &ref) const
{
    if (!ledger_->position(ref.tx_id)) return false;
    return ledger::tx_type(ledger_->tx(ref.tx_id)) == ledger::TxType::coinbase;
}

OutputRef EntityGraph::entity(const OutputRef &ref) const
{
    const auto it = entity_.find(ref);
    if (it == entity_.end()) throw ledger::NotFound("no output " + to_string(ref));
    return it->second;
}

std::vector<OutputRef> EntityGraph::sources() const
{
    std::vector<OutputRef> out;
    for (const auto &tx : ledger_->transactions()) {
        if (const auto *cb = std::get_if<ledger::CoinbaseTx>(&tx))
            for (const auto &o : cb->outputs) out.push_back(o.id);
    }
    return out;
}

}  // namespace cdk::investigation
