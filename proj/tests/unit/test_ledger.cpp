#include "cdk/world_oracle.hpp"
#include "doctest.h"
#include "test_world.hpp"

#include <algorithm>
#include <numeric>

using namespace cdk;
using namespace cdk::ledger;

// Spent-ness of ring inputs is ground truth: only the oracle answers it.
template <typename T>
concept AnswersSpentness = requires(const T &t, const OutputRef &r) { t.is_spent(r); };
static_assert(!AnswersSpentness<Ledger>);
static_assert(AnswersSpentness<WorldOracle>);

namespace {

std::vector<GroupElement> owners(test::MiniWorld &w, std::size_t count)
{
    std::vector<GroupElement> out;
    for (std::size_t k = 0; k < count; ++k) {
        out.push_back(w.fresh_key(100 + static_cast<EntityId>(k)).pk);
    }
    return out;
}

bool has_violation(const std::vector<Violation> &vs, const std::string &kind)
{
    return std::any_of(vs.begin(), vs.end(), [&](const Violation &v) { return v.kind == kind; });
}

}  // namespace

TEST_CASE("append_join_tx accepts a bijective m=3 join")
{
    test::MiniWorld w(3);
    // psi = (2,3,1) in one-based notation.
    const TxId id = append_join_tx(w.ledger, w.oracle, w.coins(0, 3), owners(w, 3), {1, 2, 0});
    const JoinTx *tx = w.ledger.find_join(id);
    REQUIRE(tx != nullptr);
    CHECK(tx->size() == 3);
    CHECK(tx->input_sigs.size() == 3);
    CHECK(*w.oracle.psi(id) == std::vector<std::uint32_t>{1, 2, 0});
    CHECK(validate_ledger(w.ledger).empty());
    for (int k = 0; k < 3; ++k) {
        CHECK(w.oracle.is_spent(w.coin(k)));
    }
}

TEST_CASE("ledger bytes carry no function of psi")
{
    auto build = [](std::vector<std::uint32_t> psi) {
        test::MiniWorld w(4, 7);
        const auto out_owners = owners(w, 4);
        append_join_tx(w.ledger, w.oracle, w.coins(0, 4), out_owners, psi);
        return w.ledger.serialize();
    };
    const Bytes a = build({0, 1, 2, 3});
    CHECK(a == build({3, 2, 1, 0}));
    CHECK(a == build({1, 3, 0, 2}));
}

TEST_CASE("append_join_tx rejections")
{
    test::MiniWorld w(6);
    CHECK_THROWS_AS(append_join_tx(w.ledger, w.oracle, w.coins(0, 3), owners(w, 3), {0, 0, 1}), LedgerRejection);
    CHECK_THROWS_AS(append_join_tx(w.ledger, w.oracle, w.coins(0, 1), owners(w, 1), {0}), LedgerRejection);
    CHECK_THROWS_AS(append_join_tx(w.ledger, w.oracle, {w.coin(0), w.coin(0)}, owners(w, 2), {0, 1}),
                    LedgerRejection);
    CHECK_THROWS_AS(append_join_tx(w.ledger, w.oracle, {w.coin(0), OutputRef{w.coinbase, 99}}, owners(w, 2), {0, 1}),
                    LedgerRejection);

    append_join_tx(w.ledger, w.oracle, w.coins(0, 3), owners(w, 3), {2, 0, 1});
    try {
        append_join_tx(w.ledger, w.oracle, {w.coin(2), w.coin(3)}, owners(w, 2), {0, 1});
        FAIL("double spend accepted");
    } catch (const LedgerRejection &e) {
        CHECK(std::string(e.what()).find("double spend") != std::string::npos);
    }
}

TEST_CASE("mixing transactions require uniform values")
{
    test::MiniWorld w(2);
    const auto extra = w.fresh_key(9);
    const TxId other = append_coinbase(w.ledger, {{extra.pk, 5}});
    CHECK_THROWS_AS(append_join_tx(w.ledger, w.oracle, {w.coin(0), OutputRef{other, 0}}, owners(w, 2), {0, 1}),
                    LedgerRejection);
}

TEST_CASE("append_ring_tx with Monero-sized ring")
{
    test::MiniWorld w(11);
    const TxId id = append_ring_tx(w.ledger, w.oracle, w.coins(0, 11), 4, w.fresh_key(50).pk);
    const RingTx *tx = w.ledger.find_ring(id);
    REQUIRE(tx != nullptr);
    const Bytes msg = canonical_bytes(TxType::ring, tx->ring, {tx->output});
    CHECK(crypto::ring_verify(w.ledger.owner_keys(tx->ring), msg, tx->ring_sig));
    CHECK(tx->key_image() == crypto::key_image(w.coin_keys[4]));
    CHECK(w.oracle.sigma(id) == 4u);
    CHECK(validate_ledger(w.ledger).empty());

    SUBCASE("second spend of the same true output is rejected")
    {
        std::vector<OutputRef> ring = w.coins(0, 11);
        std::rotate(ring.begin(), ring.begin() + 3, ring.end());  // true coin 4 now at index 1
        CHECK_THROWS_WITH_AS(append_ring_tx(w.ledger, w.oracle, ring, 1, w.fresh_key(51).pk),
                             doctest::Contains("double spend"), LedgerRejection);
    }
    SUBCASE("decoys may be reused by later rings")
    {
        CHECK_NOTHROW(append_ring_tx(w.ledger, w.oracle, w.coins(0, 11), 5, w.fresh_key(52).pk));
        CHECK(validate_ledger(w.ledger).empty());
    }
}

TEST_CASE("append_ring_tx small rings and errors")
{
    test::MiniWorld w(3);
    CHECK_NOTHROW(append_ring_tx(w.ledger, w.oracle, w.coins(0, 2), 1, w.fresh_key(7).pk));
    CHECK_THROWS_AS(append_ring_tx(w.ledger, w.oracle, w.coins(0, 2), 2, w.fresh_key(7).pk), LedgerRejection);
    CHECK_THROWS_AS(append_ring_tx(w.ledger, w.oracle, {w.coin(2), w.coin(2)}, 0, w.fresh_key(7).pk),
                    LedgerRejection);

    // An output whose key the oracle does not hold cannot be signed for.
    const auto stranger = test::random_keypair(w.rng);
    const TxId cb = append_coinbase(w.ledger, {{stranger.pk, 1000}});
    CHECK_THROWS_WITH_AS(append_ring_tx(w.ledger, w.oracle, {w.coin(2), OutputRef{cb, 0}}, 1, w.fresh_key(8).pk),
                         doctest::Contains("missing secret key"), LedgerRejection);
}

TEST_CASE("resolve_ref")
{
    test::MiniWorld w(4);
    const TxId ring_id = append_ring_tx(w.ledger, w.oracle, w.coins(0, 3), 0, w.fresh_key(5).pk);
    CHECK(w.ledger.resolve_ref(w.coin(1)).owner_pk == w.coin_keys[1].pk);
    CHECK_THROWS_AS(w.ledger.resolve_ref(OutputRef{w.coinbase, 4}), NotFound);
    CHECK_THROWS_AS(w.ledger.resolve_ref(OutputRef{TxId{}, 0}), NotFound);
    CHECK(w.ledger.resolve_ref(OutputRef{ring_id, 0}).id == OutputRef{ring_id, 0});
    CHECK_THROWS_AS(w.ledger.resolve_ref(OutputRef{ring_id, 1}), NotFound);
}

TEST_CASE("validate_ledger reports violations")
{
    test::MiniWorld w(6);
    append_ring_tx(w.ledger, w.oracle, w.coins(0, 3), 1, w.fresh_key(5).pk);
    const TxId join = append_join_tx(w.ledger, w.oracle, w.coins(3, 2), owners(w, 2), {1, 0});
    REQUIRE(validate_ledger(w.ledger).empty());
    auto txs = w.ledger.transactions();

    SUBCASE("duplicated key image")
    {
        auto copy = txs;
        RingTx clone = std::get<RingTx>(txs[1]);
        clone.output.value += 0;
        clone.ring = {w.coin(0), w.coin(1)};
        seal(clone);
        copy.push_back(clone);
        const auto vs = validate_ledger(Ledger::from_transactions(copy));
        CHECK(has_violation(vs, "key image reuse"));
    }
    SUBCASE("forward-pointing reference")
    {
        auto copy = txs;
        std::swap(copy[1], copy[0]);
        const auto vs = validate_ledger(Ledger::from_transactions(copy));
        CHECK(has_violation(vs, "ordering"));
    }
    SUBCASE("tampered join signature")
    {
        auto copy = txs;
        auto &j = std::get<JoinTx>(copy[2]);
        std::swap(j.input_sigs[0], j.input_sigs[1]);
        CHECK(has_violation(validate_ledger(Ledger::from_transactions(copy)), "signature"));
    }
    SUBCASE("unresolvable reference")
    {
        auto copy = txs;
        auto &j = std::get<JoinTx>(copy[2]);
        j.inputs[0].index = 77;
        seal(j);
        CHECK(has_violation(validate_ledger(Ledger::from_transactions(copy)), "unresolvable"));
    }
    (void)join;
}

TEST_CASE("property: join conservation and serialization round-trip on random ledgers")
{
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        test::MiniWorld w(12, seed);
        std::vector<OutputRef> unspent = w.coins(0, 12);
        for (int step = 0; step < 4; ++step) {
            std::shuffle(unspent.begin(), unspent.end(), w.rng);
            const std::size_t m = 2 + w.rng() % 3;
            std::vector<OutputRef> inputs(unspent.end() - m, unspent.end());
            unspent.resize(unspent.size() - m);
            std::vector<std::uint32_t> psi(m);
            std::iota(psi.begin(), psi.end(), 0u);
            std::shuffle(psi.begin(), psi.end(), w.rng);
            const TxId id = append_join_tx(w.ledger, w.oracle, inputs, owners(w, m), psi);
            const JoinTx &tx = *w.ledger.find_join(id);
            std::multiset<std::uint64_t> in, out;
            for (std::size_t k = 0; k < m; ++k) {
                in.insert(w.ledger.resolve_ref(tx.inputs[k]).value);
                out.insert(tx.outputs[k].value);
                CHECK(tx.outputs[k].value == w.ledger.resolve_ref(tx.inputs[psi[k]]).value);
                unspent.push_back(tx.outputs[k].id);
            }
            CHECK(in == out);
        }
        const Bytes bytes = w.ledger.serialize();
        const Ledger back = Ledger::deserialize(bytes);
        CHECK(back.serialize() == bytes);
        CHECK(validate_ledger(back).empty());
    }
}
