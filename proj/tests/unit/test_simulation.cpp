#include "cdk/simulation.hpp"
#include "doctest.h"

#include <algorithm>

using namespace cdk;
using namespace cdk::simulation;
using testimony::Direction;

namespace {

Scenario fig1(std::uint64_t seed = 7)
{
    Scenario s;
    s.seed = seed;
    s.world.entity_count = 9;
    s.world.coinbase_per_entity = 2;
    s.world.cascade = {Direction::backtrack, TxKind::ring, 3, 2, 2};
    return s;
}

Scenario join_case(std::size_t m, std::uint64_t seed)
{
    Scenario s;
    s.seed = seed;
    s.world.entity_count = m + 2;
    s.world.coinbase_per_entity = 2;
    s.world.cascade = {Direction::backtrack, TxKind::join, 1, 1, m};
    return s;
}

Scenario stolen_key(std::uint64_t seed)
{
    Scenario s = join_case(3, seed);
    s.policy.testimony_mode = TestimonyMode::individual;
    s.policy.adversary.stolen_key_false_alibi = true;
    return s;
}

std::size_t count_rings(const ledger::Ledger &l)
{
    return static_cast<std::size_t>(std::count_if(l.transactions().begin(), l.transactions().end(), [](const auto &t) {
        return ledger::tx_type(t) == ledger::TxType::ring;
    }));
}

}  // namespace

TEST_CASE("Rng draws")
{
    Rng a(9), b(9);
    for (int k = 0; k < 1000; ++k) {
        const auto x = a.below(7);
        CHECK(x < 7);
        CHECK(x == b.below(7));
    }
    CHECK_FALSE(a.chance(0.0));
    CHECK(a.chance(1.0));
    CHECK_THROWS(a.below(0));
    std::vector<int> v{1, 2, 3, 4, 5};
    a.shuffle(v);
    std::sort(v.begin(), v.end());
    CHECK(v == std::vector<int>{1, 2, 3, 4, 5});
}

TEST_CASE("scenario parsing")
{
    const json good = to_json(fig1());
    CHECK(to_json(parse_scenario(good)) == good);

    SUBCASE("defaults fill missing fields")
    {
        const Scenario s = parse_scenario(json{{"schema", "CDK/v1/scenario"}});
        CHECK(s.world.background.join_size == 3);
        CHECK(s.world.background.ring_size == 11);
    }
    SUBCASE("rejections name the field")
    {
        json j = good;
        j["world"]["entitycount"] = 3;
        CHECK_THROWS_WITH_AS(parse_scenario(j), doctest::Contains("world.entitycount"), ConfigError);
        j = good;
        j["schema"] = "v0";
        CHECK_THROWS_AS(parse_scenario(j), ConfigError);
        j = good;
        j["policy"]["cooperate_probability"] = 1.5;
        CHECK_THROWS_WITH_AS(parse_scenario(j), doctest::Contains("cooperate_probability"), ConfigError);
        j = good;
        j["world"]["cascade"]["fanout"] = 3;
        CHECK_THROWS_AS(parse_scenario(j), ConfigError);
        j = good;
        j["world"]["cascade"]["tx_type"] = "coinjoin";
        CHECK_THROWS_AS(parse_scenario(j), ConfigError);
        j = good;
        j["world"]["cascade"]["depth"] = "three";
        CHECK_THROWS_WITH_AS(parse_scenario(j), doctest::Contains("wrong type"), ConfigError);
        j = good;
        j["policy"]["adversary"] = {{"stolen_key_false_alibi", true}};
        CHECK_THROWS_AS(parse_scenario(j), ConfigError);  // needs a join cascade
    }
}

TEST_CASE("generate_world")
{
    SUBCASE("fig1 scenario shape")
    {
        const World w = generate_world(fig1());
        CHECK(count_rings(w.ledger) == 7);
        CHECK(ledger::validate_ledger(w.ledger).empty());
        const auto g = investigation::build_entity_graph(w.ledger);
        const investigation::Case c(
            g, testimony::make_inquiry("c", Direction::backtrack, {{w.flow.tx_id, w.flow.index}}, "", lea_keypair(fig1())));
        const auto s = investigation::backtrack_suspects(c, 3);
        CHECK(s.size() == 8);
        CHECK(s.terminals.contains(w.true_endpoint));
        CHECK(w.oracle.owner(w.ledger.resolve_ref(w.true_endpoint).owner_pk) == w.perpetrator);
    }
    SUBCASE("default sizes")
    {
        Scenario s;
        s.world.entity_count = 30;
        s.world.background.join_tx_count = 3;
        s.world.background.ring_tx_count = 3;
        const World w = generate_world(s);
        CHECK(ledger::validate_ledger(w.ledger).empty());
        std::size_t joins = 0, rings = 0;
        for (const auto &tx : w.ledger.transactions()) {
            if (const auto *j = std::get_if<ledger::JoinTx>(&tx)) joins += j->size() == 3;
            if (const auto *r = std::get_if<ledger::RingTx>(&tx)) rings += r->size() == 11;
        }
        CHECK(joins == 3);
        CHECK(rings == 3);
    }
    SUBCASE("same seed, same bytes")
    {
        CHECK(generate_world(fig1(4)).ledger.serialize() == generate_world(fig1(4)).ledger.serialize());
        CHECK(generate_world(fig1(4)).ledger.serialize() != generate_world(fig1(5)).ledger.serialize());
    }
    SUBCASE("infeasible")
    {
        Scenario s = fig1();
        s.world.entity_count = 2;
        s.world.coinbase_per_entity = 1;
        CHECK_THROWS_AS(generate_world(s), ConfigError);
    }
    SUBCASE("every cascade shape validates")
    {
        for (auto dir : {Direction::backtrack, Direction::forward}) {
            for (auto kind : {TxKind::ring, TxKind::join}) {
                Scenario s;
                s.world.entity_count = 12;
                s.world.coinbase_per_entity = 6;
                s.world.cascade = {dir, kind, 2, 2, 3};
                const World w = generate_world(s);
                CHECK(ledger::validate_ledger(w.ledger).empty());
                CHECK(w.flow != w.true_endpoint);
            }
        }
    }
}

TEST_CASE("ground truth survives the file round trip")
{
    const World w = generate_world(stolen_key(3));
    const json gt = ground_truth_to_json(w);
    const World back = world_from_files(w.ledger.serialize(), gt);
    CHECK(back.ledger.serialize() == w.ledger.serialize());
    CHECK(back.oracle.all_psi() == w.oracle.all_psi());
    CHECK(back.oracle.spends() == w.oracle.spends());
    CHECK(back.oracle.key_owners() == w.oracle.key_owners());
    CHECK(back.victim == w.victim);
    CHECK(back.stolen_pk == w.stolen_pk);
    CHECK(ground_truth_to_json(back) == gt);
    json bad = gt;
    bad["keys"][0]["sk"] = "00";
    CHECK_THROWS_AS(world_from_files(w.ledger.serialize(), bad), DecodeError);
}

TEST_CASE("run_scenario")
{
    SUBCASE("full cooperation on a join of three identifies the source")
    {
        const Scenario s = join_case(3, 2);
        const World w = generate_world(s);
        const auto endpoint = w.true_endpoint;
        const auto r = run_scenario(w, s);
        CHECK(r.metrics["final_suspects"] == 1);
        CHECK(r.metrics["rounds_to_singleton"] == 1);
        CHECK(r.transcript["final"]["entities"][0] == to_hex(endpoint.tx_id) + ":" + std::to_string(endpoint.index));
    }
    SUBCASE("no cooperation leaves the unpruned graph")
    {
        Scenario s = fig1();
        s.policy.cooperate_probability = 0;
        const auto r = run_scenario(generate_world(s), s);
        CHECK(r.metrics["final_suspects"] == 8);
        for (const auto &round : r.transcript["rounds"]) CHECK(round["messages"].empty());
    }
    SUBCASE("key loss silences everyone")
    {
        Scenario s = fig1();
        s.policy.key_loss_probability = 1;
        CHECK(run_scenario(generate_world(s), s).metrics["final_suspects"] == 8);
    }
    SUBCASE("stolen key with a cooperating victim")
    {
        const Scenario s = stolen_key(8);
        const auto r = run_scenario(generate_world(s), s);
        CHECK(r.metrics["conflicts"] == 1);
        CHECK(r.metrics["false_accusations_averted"] == 1);
        CHECK(r.metrics["false_accusations"] == 0);
        CHECK(r.metrics["final_suspects"] == 2);
    }
    SUBCASE("deterministic")
    {
        const Scenario s = stolen_key(8);
        const auto a = run_scenario(generate_world(s), s);
        const auto b = run_scenario(generate_world(s), s);
        CHECK(a.transcript.dump() == b.transcript.dump());
        CHECK(a.testimonies == b.testimonies);
    }
    SUBCASE("metrics derive from the transcript alone")
    {
        const Scenario s = fig1(9);
        const auto r = run_scenario(generate_world(s), s);
        CHECK(compute_metrics(r.transcript) == r.metrics);
        CHECK(summary_table(r.transcript).ends_with("suspects: 1\n"));
    }
}

TEST_CASE("channel discipline")
{
    Scenario s = join_case(5, 4);
    s.policy.testimony_mode = TestimonyMode::individual;
    const auto r = run_scenario(generate_world(s), s);
    const auto lea = crypto::GroupElement::decode(from_hex(r.transcript["lea_pk"].get<std::string>()));
    for (const auto &round : r.transcript["rounds"]) {
        for (const auto &inq : round["inquiries"]) {
            CHECK(testimony::verify_inquiry(testimony::Inquiry::decode(from_hex(inq["bytes"].get<std::string>())), lea));
        }
        for (const auto &m : round["messages"]) {
            std::set<std::string> keys;
            for (const auto &[k, _] : m.items()) keys.insert(k);
            CHECK(keys == std::set<std::string>{"accepted", "bytes", "digest", "facts", "inquiry", "kind", "reason"});
        }
    }
}

TEST_CASE("property: k cooperating join witnesses leave m - k suspects")
{
    for (std::uint64_t seed = 0; seed < 12; ++seed) {
        Scenario s = join_case(3 + seed % 6, seed);
        s.policy.cooperate_probability = 0.6;
        s.policy.testimony_mode = seed % 2 ? TestimonyMode::group : TestimonyMode::individual;
        const auto r = run_scenario(generate_world(s), s);
        std::size_t k = 0;
        for (const auto &t : r.transcript["ground_truth"]["testimonies"]) k += t["witnesses"].size();
        CHECK(r.transcript["rounds"][0]["suspects_after"].get<std::size_t>() == s.world.cascade.mixin - k);
        CHECK(r.metrics["false_accusations"] == 0);
    }
}

TEST_CASE("act_witnesses")
{
    SUBCASE("ring backtrack: one group bundle, spender alone")
    {
        Scenario s;
        s.world.entity_count = 12;
        s.world.coinbase_per_entity = 3;
        s.world.cascade = {Direction::backtrack, TxKind::ring, 2, 2, 5};
        const World w = generate_world(s);
        // The child ring under the cash-out that the perpetrator did not use.
        const auto &top = *w.ledger.find_ring(w.flow.tx_id);
        const auto sigma = *w.oracle.sigma(top.id);
        const ledger::RingTx *other = nullptr;
        for (std::uint32_t k = 0; k < top.size(); ++k)
            if (k != sigma && w.ledger.find_ring(top.ring[k].tx_id)) other = w.ledger.find_ring(top.ring[k].tx_id);
        REQUIRE(other);
        const auto inq = testimony::make_inquiry("c", Direction::backtrack, {{other->id, 0}}, "", lea_keypair(s));
        Rng rng(1);
        const auto answers = act_witnesses(w, s.policy, inq, rng);
        std::size_t groups = 0, singles = 0;
        for (const auto &a : answers) {
            CHECK(testimony::verify_testimony(w.ledger, inq, a.testimony).accepted);
            if (std::holds_alternative<testimony::RingGroupBundle>(a.testimony)) ++groups;
            else ++singles;
        }
        CHECK(groups == 1);
        CHECK(singles == 1);  // an innocent spender shows inclusion
    }
    SUBCASE("ring forward: only a non-flow spender answers")
    {
        Scenario s;
        s.world.entity_count = 10;
        s.world.coinbase_per_entity = 3;
        s.world.cascade = {Direction::forward, TxKind::ring, 1, 3, 4};
        const World w = generate_world(s);
        const auto g = investigation::build_entity_graph(w.ledger);
        std::size_t answered = 0;
        for (const auto &ref : g.referenced_by(w.flow)) {
            const auto inq = testimony::make_inquiry("c", Direction::forward, {{ref.tx, ref.position}}, "", lea_keypair(s));
            Rng rng(2);
            const auto answers = act_witnesses(w, s.policy, inq, rng);
            if (*w.oracle.sigma(ref.tx) == ref.position) {
                CHECK(answers.empty());
                continue;
            }
            REQUIRE(answers.size() == 1);
            CHECK(testimony::verify_testimony(w.ledger, inq, answers[0].testimony).accepted);
            ++answered;
        }
        CHECK(answered >= 2);
    }
}

TEST_CASE("cover transactions")
{
    Scenario s;
    s.world.entity_count = 10;
    s.world.coinbase_per_entity = 4;
    s.world.cascade = {Direction::forward, TxKind::ring, 2, 2, 3};
    World w = generate_world(s);
    Rng rng(5);
    const auto id = inject_cover_tx(w, w.flow, 3, rng);
    const auto &cover = *w.ledger.find_ring(id);
    const auto pos = std::find(cover.ring.begin(), cover.ring.end(), w.flow) - cover.ring.begin();
    CHECK(pos < static_cast<std::ptrdiff_t>(cover.size()));
    CHECK(*w.oracle.sigma(id) != pos);
    CHECK(w.oracle.owner(cover.output.owner_pk) == w.perpetrator);
    CHECK(ledger::validate_ledger(w.ledger).empty());

    s.policy.adversary.cover_tx_count = 2;
    const auto r = run_scenario(generate_world(s), s);
    CHECK(r.metrics["cover_inflation"].get<double>() > 1.0);
    CHECK(r.transcript["ledger_extension"]["after"]["reach"] > r.transcript["ledger_extension"]["before"]["reach"]);
}
