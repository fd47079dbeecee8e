#include "cdk/simulation.hpp"

#include <algorithm>
#include <set>

namespace cdk::simulation {

namespace {

using testimony::Direction;

json ref_json(const OutputRef &r) { return json{{"tx", to_hex(r.tx_id)}, {"index", r.index}}; }

OutputRef ref_from(const json &j)
{
    return OutputRef{array_from_hex<32>(j.at("tx").get<std::string>()), j.at("index").get<std::uint32_t>()};
}

struct Node {
    OutputRef out;
    EntityId owner = 0;
};

class Builder {
public:
    Builder(const Scenario &s) : sc_(s), rng_(s.seed) {}

    World build()
    {
        const auto &w = sc_.world;
        w_.perpetrator = static_cast<EntityId>(rng_.below(w.entity_count));

        std::vector<ledger::CoinbaseOutput> outs;
        std::vector<EntityId> owners;
        for (EntityId e = 0; e < w.entity_count; ++e) {
            for (std::size_t k = 0; k < w.coinbase_per_entity; ++k) {
                outs.push_back({key(e).pk, w.value_unit});
                owners.push_back(e);
            }
        }
        const TxId cb = ledger::append_coinbase(w_.ledger, outs);
        unused_.resize(w.entity_count);
        for (std::uint32_t k = 0; k < outs.size(); ++k) {
            unused_[owners[k]].push_back({cb, k});
            coins_.push_back({cb, k});
        }

        background();
        const auto &c = w.cascade;
        if (c.direction == Direction::backtrack) {
            const Node top = c.tx_type == TxKind::ring ? ring_back(0, true) : join_back(0, true);
            w_.flow = top.out;
        } else {
            w_.flow = take(w_.perpetrator);
            if (c.tx_type == TxKind::ring) {
                ring_forward();
            } else {
                join_forward();
            }
        }
        return std::move(w_);
    }

private:
    crypto::KeyPair key(EntityId e)
    {
        const auto kp = crypto::derive_keypair(rng_.seed());
        w_.oracle.register_key(kp, e);
        return kp;
    }

    OutputRef take(EntityId e)
    {
        if (unused_[e].empty()) throw ConfigError("infeasible: entity " + std::to_string(e) + " has no coins left");
        OutputRef r = unused_[e].front();
        unused_[e].erase(unused_[e].begin());
        return r;
    }

    // A random non-perpetrator entity with a coin left, outside `exclude`.
    EntityId innocent(const std::set<EntityId> &exclude = {})
    {
        std::vector<EntityId> ok;
        for (EntityId e = 0; e < unused_.size(); ++e)
            if (e != w_.perpetrator && !unused_[e].empty() && !exclude.contains(e)) ok.push_back(e);
        if (ok.empty()) throw ConfigError("infeasible: not enough coinbase outputs for the requested world");
        return ok[rng_.below(ok.size())];
    }

    std::vector<OutputRef> decoys(std::size_t n, const std::vector<OutputRef> &taken)
    {
        std::vector<OutputRef> pool;
        for (const auto &c : coins_)
            if (std::find(taken.begin(), taken.end(), c) == taken.end()) pool.push_back(c);
        if (pool.size() < n) throw ConfigError("infeasible: not enough outputs for the requested ring size");
        std::vector<OutputRef> out;
        for (std::size_t k = 0; k < n; ++k) {
            const std::size_t at = rng_.below(pool.size());
            out.push_back(pool[at]);
            pool.erase(pool.begin() + static_cast<std::ptrdiff_t>(at));
        }
        return out;
    }

    // Ring spending `spent` (owned by `owner`) to a fresh key of the owner;
    // `others` join the ring as decoys.
    Node ring(const OutputRef &spent, EntityId owner, std::vector<OutputRef> members)
    {
        members.push_back(spent);
        rng_.shuffle(members);
        const auto sigma = static_cast<std::uint32_t>(std::find(members.begin(), members.end(), spent) - members.begin());
        const TxId id = ledger::append_ring_tx(w_.ledger, w_.oracle, members, sigma, key(owner).pk);
        return {{id, 0}, owner};
    }

    // Join over `inputs`; returns one node per output, owned as psi dictates.
    std::vector<Node> join(std::vector<Node> inputs)
    {
        rng_.shuffle(inputs);
        const std::size_t m = inputs.size();
        std::vector<std::uint32_t> psi(m);
        for (std::uint32_t k = 0; k < m; ++k) psi[k] = k;
        rng_.shuffle(psi);
        std::vector<OutputRef> refs;
        std::vector<crypto::GroupElement> owners_pk;
        for (const auto &n : inputs) refs.push_back(n.out);
        for (std::size_t j = 0; j < m; ++j) owners_pk.push_back(key(inputs[psi[j]].owner).pk);
        const TxId id = ledger::append_join_tx(w_.ledger, w_.oracle, refs, owners_pk, psi);
        std::vector<Node> outs;
        for (std::uint32_t j = 0; j < m; ++j) outs.push_back({{id, j}, inputs[psi[j]].owner});
        return outs;
    }

    // Output of `outs` owned by the participant that brought `input`.
    static Node funded_by(const ledger::Ledger &l, const WorldOracle &o, const std::vector<Node> &outs,
                          const OutputRef &input)
    {
        const TxId &id = outs.front().out.tx_id;
        const auto &tx = *l.find_join(id);
        const auto pos = static_cast<std::uint32_t>(std::find(tx.inputs.begin(), tx.inputs.end(), input) - tx.inputs.begin());
        const auto &psi = *o.psi(id);
        const auto j = static_cast<std::size_t>(std::find(psi.begin(), psi.end(), pos) - psi.begin());
        return outs[j];
    }

    void background()
    {
        const auto &b = sc_.world.background;
        for (std::size_t k = 0; k < b.join_tx_count; ++k) {
            std::vector<Node> inputs;
            std::set<EntityId> chosen;
            for (std::size_t p = 0; p < b.join_size; ++p) {
                const EntityId e = innocent(chosen);
                chosen.insert(e);
                inputs.push_back({take(e), e});
            }
            join(inputs);
        }
        for (std::size_t k = 0; k < b.ring_tx_count; ++k) {
            const EntityId e = innocent();
            const OutputRef coin = take(e);
            ring(coin, e, decoys(b.ring_size - 1, {coin}));
        }
    }

    Node leaf(bool on_path)
    {
        const EntityId e = on_path ? w_.perpetrator : innocent();
        const OutputRef coin = take(e);
        if (on_path) w_.true_endpoint = coin;
        return {coin, e};
    }

    Node ring_back(std::size_t layer, bool on_path)
    {
        const auto &c = sc_.world.cascade;
        if (layer == c.depth) return leaf(on_path);
        const Node spent = ring_back(layer + 1, on_path);
        std::vector<OutputRef> members;
        for (std::size_t k = 1; k < c.fanout; ++k) members.push_back(ring_back(layer + 1, false).out);
        auto taken = members;
        taken.push_back(spent.out);
        for (const auto &d : decoys(c.mixin - c.fanout, taken)) members.push_back(d);
        return ring(spent.out, spent.owner, members);
    }

    Node join_back(std::size_t layer, bool on_path)
    {
        const auto &c = sc_.world.cascade;
        if (layer == c.depth) return leaf(on_path);
        std::vector<Node> inputs{join_back(layer + 1, on_path)};
        for (std::size_t k = 1; k < c.fanout; ++k) inputs.push_back(join_back(layer + 1, false));
        std::set<EntityId> chosen{w_.perpetrator};
        for (const auto &n : inputs) chosen.insert(n.owner);
        while (inputs.size() < c.mixin) {
            const EntityId e = innocent(chosen);
            chosen.insert(e);
            inputs.push_back({take(e), e});
        }
        const OutputRef continuing = inputs.front().out;
        const auto outs = join(inputs);
        const Node result = funded_by(w_.ledger, w_.oracle, outs, continuing);

        if (layer == 0 && on_path && sc_.policy.adversary.stolen_key_false_alibi) {
            std::vector<Node> others;
            for (const auto &o : outs)
                if (o.owner != w_.perpetrator) others.push_back(o);
            if (others.empty()) throw ConfigError("infeasible: no victim in the cash-out transaction");
            const Node victim = others[rng_.below(others.size())];
            w_.victim = victim.owner;
            w_.stolen_pk = w_.ledger.resolve_ref(victim.out).owner_pk;
        }
        return result;
    }

    void ring_forward()
    {
        const auto &c = sc_.world.cascade;
        std::vector<Node> layer{{w_.flow, w_.perpetrator}};
        Node path = layer.front();
        for (std::size_t d = 0; d < c.depth; ++d) {
            std::vector<Node> next;
            for (const auto &n : layer) {
                const Node own = ring(n.out, n.owner, decoys(c.mixin - 1, {n.out}));
                if (n.out == path.out) path = own;
                next.push_back(own);
                for (std::size_t k = 1; k < c.fanout; ++k) {
                    const EntityId e = innocent();
                    const OutputRef coin = take(e);
                    auto members = decoys(c.mixin - 2, {coin, n.out});
                    members.push_back(n.out);
                    next.push_back(ring(coin, e, members));
                }
            }
            layer = std::move(next);
        }
        w_.true_endpoint = path.out;
    }

    void join_forward()
    {
        const auto &c = sc_.world.cascade;
        std::vector<Node> layer{{w_.flow, w_.perpetrator}};
        Node path = layer.front();
        for (std::size_t d = 0; d < c.depth; ++d) {
            std::vector<Node> next;
            for (const auto &n : layer) {
                std::vector<Node> inputs{n};
                std::set<EntityId> chosen{w_.perpetrator, n.owner};
                while (inputs.size() < c.mixin) {
                    const EntityId e = innocent(chosen);
                    chosen.insert(e);
                    inputs.push_back({take(e), e});
                }
                const auto outs = join(inputs);
                const Node own = funded_by(w_.ledger, w_.oracle, outs, n.out);
                if (n.out == path.out) path = own;
                next.push_back(own);
                std::vector<Node> rest;
                for (const auto &o : outs)
                    if (o.out != own.out) rest.push_back(o);
                rng_.shuffle(rest);
                for (std::size_t k = 1; k < c.fanout && k - 1 < rest.size(); ++k) next.push_back(rest[k - 1]);
            }
            layer = std::move(next);
        }
        w_.true_endpoint = path.out;
    }

    const Scenario &sc_;
    Rng rng_;
    World w_;
    std::vector<std::vector<OutputRef>> unused_;
    std::vector<OutputRef> coins_;
};

}  // namespace

World generate_world(const Scenario &scenario)
{
    validate(scenario);
    try {
        return Builder(scenario).build();
    } catch (const ledger::LedgerRejection &e) {
        throw ConfigError(std::string("infeasible: ") + e.what());
    }
}

crypto::KeyPair lea_keypair(const Scenario &scenario)
{
    ByteWriter w;
    w.raw(as_bytes("CDK/v1/lea"));
    w.u64(scenario.seed);
    return crypto::derive_keypair(sha256(w.bytes()));
}

json ground_truth_to_json(const World &world)
{
    const auto &o = world.oracle;
    json keys = json::array();
    for (const auto &[pk, sk] : o.secret_keys())
        keys.push_back({{"pk", to_hex(pk.bytes())}, {"sk", to_hex(sk.bytes())}, {"entity", *o.owner(pk)}});
    json psi = json::object(), sigma = json::object(), spends = json::array();
    for (const auto &[tx, p] : o.all_psi()) psi[to_hex(tx)] = p;
    for (const auto &[tx, s] : o.all_sigma()) sigma[to_hex(tx)] = s;
    for (const auto &[ref, tx] : o.spends()) spends.push_back({{"output", ref_json(ref)}, {"spender", to_hex(tx)}});
    return json{
        {"schema", kGroundTruthSchema},
        {"perpetrator", world.perpetrator},
        {"victim", world.victim ? json(*world.victim) : json(nullptr)},
        {"stolen_pk", world.stolen_pk ? json(to_hex(world.stolen_pk->bytes())) : json(nullptr)},
        {"flow", ref_json(world.flow)},
        {"true_endpoint", ref_json(world.true_endpoint)},
        {"keys", keys},
        {"psi", psi},
        {"sigma", sigma},
        {"spends", spends},
    };
}

World world_from_files(std::span<const std::uint8_t> ledger_bytes, const json &gt)
{
    if (gt.value("schema", "") != kGroundTruthSchema) throw DecodeError("not a ground-truth file");
    World w;
    w.ledger = Ledger::deserialize(ledger_bytes);
    try {
        w.perpetrator = gt.at("perpetrator").get<EntityId>();
        if (!gt.at("victim").is_null()) w.victim = gt.at("victim").get<EntityId>();
        if (!gt.at("stolen_pk").is_null())
            w.stolen_pk = crypto::GroupElement::decode(from_hex(gt.at("stolen_pk").get<std::string>()));
        w.flow = ref_from(gt.at("flow"));
        w.true_endpoint = ref_from(gt.at("true_endpoint"));
        for (const auto &k : gt.at("keys")) {
            const auto kp = crypto::KeyPair::from_secret(crypto::Scalar::from_canonical(from_hex(k.at("sk").get<std::string>())));
            if (to_hex(kp.pk.bytes()) != k.at("pk").get<std::string>()) throw DecodeError("key pair mismatch");
            w.oracle.register_key(kp, k.at("entity").get<EntityId>());
        }
        for (const auto &[tx, p] : gt.at("psi").items())
            w.oracle.record_psi(array_from_hex<32>(tx), p.get<std::vector<std::uint32_t>>());
        for (const auto &[tx, s] : gt.at("sigma").items()) w.oracle.record_sigma(array_from_hex<32>(tx), s.get<std::uint32_t>());
        for (const auto &s : gt.at("spends"))
            w.oracle.mark_spent(ref_from(s.at("output")), array_from_hex<32>(s.at("spender").get<std::string>()));
    } catch (const json::exception &e) {
        throw DecodeError(std::string("malformed ground truth: ") + e.what());
    } catch (const crypto::CryptoError &e) {
        throw DecodeError(std::string("malformed ground truth: ") + e.what());
    }
    return w;
}

TxId inject_cover_tx(World &world, const OutputRef &flow, std::size_t ring_size, Rng &rng)
{
    std::optional<OutputRef> coin;
    std::vector<OutputRef> coinbase;
    for (const auto &tx : world.ledger.transactions()) {
        const auto *cb = std::get_if<ledger::CoinbaseTx>(&tx);
        if (!cb) continue;
        for (const auto &out : cb->outputs) {
            coinbase.push_back(out.id);
            if (!coin && out.id != flow && !world.oracle.is_spent(out.id) &&
                world.oracle.owner(out.owner_pk) == world.perpetrator)
                coin = out.id;
        }
    }
    if (!coin) throw ConfigError("no unspent perpetrator coin left for a cover transaction");

    std::vector<OutputRef> ring{*coin, flow};
    std::erase_if(coinbase, [&](const OutputRef &r) { return r == *coin || r == flow; });
    while (ring.size() < std::max<std::size_t>(ring_size, 2) && !coinbase.empty()) {
        const std::size_t at = rng.below(coinbase.size());
        ring.push_back(coinbase[at]);
        coinbase.erase(coinbase.begin() + static_cast<std::ptrdiff_t>(at));
    }
    rng.shuffle(ring);
    const auto sigma = static_cast<std::uint32_t>(std::find(ring.begin(), ring.end(), *coin) - ring.begin());
    const auto kp = crypto::derive_keypair(rng.seed());
    world.oracle.register_key(kp, world.perpetrator);
    return ledger::append_ring_tx(world.ledger, world.oracle, ring, sigma, kp.pk);
}

}  // namespace cdk::simulation
