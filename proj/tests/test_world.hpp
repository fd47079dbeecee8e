#pragma once

#include "cdk/world_oracle.hpp"
#include "test_support.hpp"

namespace cdk::test {

// Hand-built ledger for unit tests: `coins` coinbase outputs of equal value,
// each owned by its own registered key.
struct MiniWorld {
    ledger::Ledger ledger;
    ledger::WorldOracle oracle;
    std::vector<crypto::KeyPair> coin_keys;
    ledger::TxId coinbase{};
    std::mt19937_64 rng;

    explicit MiniWorld(std::size_t coins, std::uint64_t seed = 42, std::uint64_t value = 1000) : rng(seed)
    {
        std::vector<ledger::CoinbaseOutput> outs;
        for (std::size_t k = 0; k < coins; ++k) {
            coin_keys.push_back(random_keypair(rng));
            oracle.register_key(coin_keys.back(), static_cast<ledger::EntityId>(k));
            outs.push_back({coin_keys.back().pk, value});
        }
        coinbase = ledger::append_coinbase(ledger, outs);
    }

    ledger::OutputRef coin(std::size_t k) const { return {coinbase, static_cast<std::uint32_t>(k)}; }

    crypto::KeyPair fresh_key(ledger::EntityId owner)
    {
        const auto kp = random_keypair(rng);
        oracle.register_key(kp, owner);
        return kp;
    }

    std::vector<ledger::OutputRef> coins(std::size_t first, std::size_t count) const
    {
        std::vector<ledger::OutputRef> out;
        for (std::size_t k = 0; k < count; ++k) {
            out.push_back(coin(first + k));
        }
        return out;
    }
};

}  // namespace cdk::test

namespace cdk::test {

// Complete m-ary tree of ring transactions `depth` layers deep on top of
// m^depth coinbase coins. True inputs are drawn at random.
struct RingCascade {
    MiniWorld w;
    std::size_t m;
    std::size_t depth;
    std::vector<std::vector<ledger::TxId>> layers;  // layers[0] = {cash-out tx}
    ledger::TxId top{};

    static std::size_t power(std::size_t m, std::size_t d)
    {
        std::size_t p = 1;
        while (d-- > 0) p *= m;
        return p;
    }

    RingCascade(std::size_t m_, std::size_t depth_, std::uint64_t seed = 3)
        : w(power(m_, depth_), seed), m(m_), depth(depth_)
    {
        std::vector<ledger::OutputRef> level = w.coins(0, power(m, depth));
        layers.resize(depth);
        for (std::size_t layer = depth; layer-- > 0;) {
            std::vector<ledger::OutputRef> next;
            for (std::size_t g = 0; g < level.size(); g += m) {
                std::vector<ledger::OutputRef> ring(level.begin() + g, level.begin() + g + m);
                const auto sigma = static_cast<std::uint32_t>(w.rng() % m);
                const auto id = ledger::append_ring_tx(w.ledger, w.oracle, ring, sigma, w.fresh_key(1000 + g).pk);
                layers[layer].push_back(id);
                next.push_back({id, 0});
            }
            level = std::move(next);
        }
        top = layers[0].front();
    }

    // The coinbase coin that truly funds the cash-out.
    ledger::OutputRef true_source() const
    {
        ledger::OutputRef cur{top, 0};
        while (cur.tx_id != w.coinbase) {
            const auto &tx = *w.ledger.find_ring(cur.tx_id);
            cur = tx.ring[*w.oracle.sigma(cur.tx_id)];
        }
        return cur;
    }
};

}  // namespace cdk::test
