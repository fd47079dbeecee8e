#include "cdk/simulation.hpp"

#include <algorithm>
#include <memory>
#include <set>

namespace cdk::simulation {

namespace {

using investigation::Case;
using investigation::EntityGraph;
using testimony::Direction;
using testimony::Inquiry;
using testimony::InquiryTarget;
using testimony::Testimony;

std::string ref_key(const OutputRef &r) { return to_hex(r.tx_id) + ":" + std::to_string(r.index); }

class Holders {
public:
    explicit Holders(const World &w) : w_(w) {}

    EntityId owner(const OutputRef &ref) const { return *w_.oracle.owner(w_.ledger.resolve_ref(ref).owner_pk); }
    crypto::Scalar sk(const crypto::GroupElement &pk) const { return *w_.oracle.secret_key(pk); }
    crypto::Scalar sk(const OutputRef &ref) const { return sk(w_.ledger.resolve_ref(ref).owner_pk); }

private:
    const World &w_;
};

// Draws are made for every eligible witness so the stream does not depend
// on earlier outcomes.
bool willing(const PolicyConfig &policy, Rng &rng)
{
    const bool lost = rng.chance(policy.key_loss_probability);
    const bool cooperate = rng.chance(policy.cooperate_probability);
    return !lost && cooperate;
}

void join_answers(const World &w, const PolicyConfig &policy, const Inquiry &inq, const ledger::JoinTx &tx,
                  std::uint32_t index, Rng &rng, std::vector<WitnessAnswer> &out)
{
    const Holders h(w);
    const auto &psi = *w.oracle.psi(tx.id);
    auto output_of = [&](std::uint32_t i) {
        return static_cast<std::uint32_t>(std::find(psi.begin(), psi.end(), i) - psi.begin());
    };
    const bool back = inq.direction == Direction::backtrack;
    const std::uint32_t skip = back ? psi.at(index) : index;

    if (back && w.stolen_pk && h.owner(tx.inputs[skip]) == w.perpetrator) {
        for (std::uint32_t jv = 0; jv < tx.outputs.size(); ++jv) {
            if (tx.outputs[jv].owner_pk != *w.stolen_pk) continue;
            out.push_back({make_join_individual(w.ledger, inq, tx, skip, jv, h.sk(tx.inputs[skip]), h.sk(*w.stolen_pk)),
                           false,
                           {w.perpetrator},
                           {tx.inputs[skip]}});
        }
    }

    std::vector<testimony::JoinMember> members;
    std::vector<EntityId> who;
    for (std::uint32_t i = 0; i < tx.size(); ++i) {
        if (i == skip) continue;
        const EntityId e = h.owner(tx.inputs[i]);
        if (e == w.perpetrator || !willing(policy, rng)) continue;
        const std::uint32_t j = output_of(i);
        members.push_back({tx.id, i, j, h.sk(tx.inputs[i]), h.sk(tx.outputs[j].owner_pk)});
        who.push_back(e);
    }
    if (members.empty()) return;
    if (policy.testimony_mode == TestimonyMode::individual) {
        for (std::size_t k = 0; k < members.size(); ++k) {
            const auto &m = members[k];
            out.push_back({make_join_individual(w.ledger, inq, tx, m.input_index, m.output_index, m.sk_input, m.sk_output),
                           true,
                           {who[k]},
                           {tx.inputs[m.input_index]}});
        }
        return;
    }
    WitnessAnswer group{make_join_group(w.ledger, inq, members), true, who, {}};
    for (const auto &m : members) group.witness_outputs.push_back(tx.inputs[m.input_index]);
    out.push_back(std::move(group));
}

void ring_answers(const World &w, const PolicyConfig &policy, const Inquiry &inq, const ledger::RingTx &tx,
                  std::uint32_t index, Rng &rng, std::vector<WitnessAnswer> &out)
{
    const Holders h(w);
    const std::uint32_t sigma = *w.oracle.sigma(tx.id);

    if (inq.direction == Direction::forward) {
        if (sigma == index) return;  // the flow itself was spent here
        const EntityId e = h.owner(tx.ring[sigma]);
        if (e == w.perpetrator || !willing(policy, rng)) return;
        out.push_back({make_ring_forward_phantom(w.ledger, inq, tx, index, h.sk(tx.ring[sigma]), tx.ring[sigma]),
                       true,
                       {e},
                       {tx.ring[sigma]}});
        return;
    }

    std::vector<std::uint32_t> group;
    std::vector<EntityId> who;
    auto individual = [&](std::uint32_t k, EntityId e) {
        out.push_back({make_ring_backtrack_phantom(w.ledger, inq, tx, tx.ring[k], h.sk(tx.ring[k]), {tx.ring[k]}),
                       true,
                       {e},
                       {tx.ring[k]}});
    };
    for (std::uint32_t k = 0; k < tx.size(); ++k) {
        const EntityId e = h.owner(tx.ring[k]);
        if (e == w.perpetrator || !willing(policy, rng)) continue;
        if (k == sigma) {
            individual(k, e);  // a spender can only show inclusion
        } else {
            group.push_back(k);
            who.push_back(e);
        }
    }
    if (policy.testimony_mode == TestimonyMode::individual || group.size() < 2) {
        for (std::size_t k = 0; k < group.size(); ++k) individual(group[k], who[k]);
        return;
    }
    std::vector<OutputRef> declared;
    for (auto k : group) declared.push_back(tx.ring[k]);
    std::vector<testimony::RingPhantomTestimony> phantoms;
    for (auto k : group)
        phantoms.push_back(make_ring_backtrack_phantom(w.ledger, inq, tx, tx.ring[k], h.sk(tx.ring[k]), declared));
    out.push_back({make_ring_group_bundle(std::move(phantoms)), true, who, declared});
}

std::string kind_of(const Testimony &t)
{
    if (std::holds_alternative<testimony::JoinIndividualTestimony>(t)) return "join individual";
    if (std::holds_alternative<testimony::JoinGroupTestimony>(t)) return "join group";
    if (std::holds_alternative<testimony::RingGroupBundle>(t)) return "ring group";
    return std::string(to_string(std::get<testimony::RingPhantomTestimony>(t).claimed_role));
}

// True flow per the oracle: outputs from the flow layer by layer.
std::vector<OutputRef> true_path(const World &w, Direction d)
{
    std::vector<OutputRef> path{w.flow};
    for (std::size_t guard = 0; guard < w.ledger.size(); ++guard) {
        const OutputRef cur = path.back();
        if (d == Direction::backtrack) {
            if (const auto *r = w.ledger.find_ring(cur.tx_id)) {
                path.push_back(r->ring[*w.oracle.sigma(r->id)]);
            } else if (const auto *j = w.ledger.find_join(cur.tx_id)) {
                path.push_back(j->inputs[w.oracle.psi(j->id)->at(cur.index)]);
            } else {
                break;
            }
        } else {
            const auto spender = w.oracle.spender(cur);
            if (!spender) break;
            if (w.ledger.find_ring(*spender)) {
                path.push_back({*spender, 0});
            } else {
                const auto &j = *w.ledger.find_join(*spender);
                const auto pos = static_cast<std::uint32_t>(std::find(j.inputs.begin(), j.inputs.end(), cur) - j.inputs.begin());
                const auto &psi = *w.oracle.psi(j.id);
                path.push_back({j.id, static_cast<std::uint32_t>(std::find(psi.begin(), psi.end(), pos) - psi.begin())});
            }
        }
    }
    return path;
}

json conflicts_json(const Case &c)
{
    json out = json::array();
    for (const auto &k : c.conflicts()) {
        json facts = json::array(), tst = json::array();
        for (const auto &f : k.facts) facts.push_back(testimony::describe(f.claim));
        for (const auto &d : k.testimonies) tst.push_back(to_hex(d));
        out.push_back({{"tx", to_hex(k.tx)},
                       {"kind", k.kind},
                       {"output", k.output ? json(*k.output) : json(nullptr)},
                       {"facts", facts},
                       {"testimonies", tst}});
    }
    return out;
}

}  // namespace

std::vector<WitnessAnswer> act_witnesses(const World &world, const PolicyConfig &policy, const Inquiry &inquiry, Rng &rng)
{
    std::vector<WitnessAnswer> out;
    for (const auto &t : inquiry.targets) {
        if (const auto *j = world.ledger.find_join(t.tx_id)) {
            join_answers(world, policy, inquiry, *j, t.index, rng, out);
        } else if (const auto *r = world.ledger.find_ring(t.tx_id)) {
            ring_answers(world, policy, inquiry, *r, t.index, rng, out);
        }
    }
    return out;
}

RunResult run_scenario(World world, const Scenario &sc)
{
    validate(sc);
    Rng rng(sc.seed ^ 0x9e3779b97f4a7c15ULL);
    const auto lea = lea_keypair(sc);
    const Direction dir = sc.world.cascade.direction;
    const bool back = dir == Direction::backtrack;
    const std::size_t depth = sc.depth_bound();

    auto graph = std::make_unique<EntityGraph>(EntityGraph::build(world.ledger));
    auto opening = [&](const EntityGraph &g) {
        std::vector<InquiryTarget> targets;
        if (back) {
            targets.push_back({world.flow.tx_id, world.flow.index});
        } else {
            for (const auto &r : g.referenced_by(world.flow)) targets.push_back({r.tx, r.position});
        }
        if (targets.empty()) throw ConfigError("nothing references the investigated flow");
        return targets;
    };
    struct Size {
        std::size_t suspects = 0, reach = 0;
    };
    auto measure = [&](const Case &c) {
        const auto s = back ? investigation::backtrack_suspects(c, depth)
                            : investigation::forward_reach(c, investigation::ForwardOptions{depth, 0});
        return Size{s.size(), s.reached.size()};
    };
    auto inquiry_for = [&](const InquiryTarget &t) {
        return make_inquiry(sc.inquiry.case_id, dir, {t}, sc.inquiry.narrative, lea);
    };

    json transcript{{"schema", kTranscriptSchema},
                    {"seed", sc.seed},
                    {"case_id", sc.inquiry.case_id},
                    {"direction", std::string(to_string(dir))},
                    {"lea_pk", to_hex(lea.pk.bytes())},
                    {"max_depth", depth}};
    json truth{{"perpetrator", world.perpetrator},
               {"true_endpoint", ref_key(world.true_endpoint)},
               {"cover_txs", json::array()},
               {"testimonies", json::array()},
               {"retained", json::array()}};

    if (const std::size_t k = sc.policy.adversary.cover_tx_count; k > 0) {
        const Size before = measure(Case(*graph, inquiry_for(opening(*graph).front())));
        for (std::size_t n = 0; n < k; ++n)
            truth["cover_txs"].push_back(to_hex(inject_cover_tx(world, world.flow, sc.world.cascade.mixin, rng)));
        graph = std::make_unique<EntityGraph>(EntityGraph::build(world.ledger));
        const Size after = measure(Case(*graph, inquiry_for(opening(*graph).front())));
        transcript["ledger_extension"] = {{"transactions_added", k},
                                          {"before", {{"suspects", before.suspects}, {"reach", before.reach}}},
                                          {"after", {{"suspects", after.suspects}, {"reach", after.reach}}}};
    }

    const auto path = true_path(world, dir);
    const OutputRef watch = path[std::min(depth, path.size() - 1)];

    RunResult result;
    std::optional<Case> cs;
    std::vector<InquiryTarget> targets = opening(*graph);
    std::string termination;
    json rounds = json::array();
    for (std::size_t r = 1;; ++r) {
        if (r > sc.inquiry.max_rounds) {
            termination = "round limit";
            break;
        }
        if (r > depth) {
            termination = "depth bound";
            break;
        }
        if (targets.empty()) {
            termination = "exhausted";
            break;
        }
        std::vector<Inquiry> inquiries;
        for (const auto &t : targets) inquiries.push_back(inquiry_for(t));
        for (const auto &inq : inquiries) {
            if (cs) {
                cs->add_inquiry(inq);
            } else {
                cs.emplace(*graph, inq);
            }
        }
        const Size before = measure(*cs);

        json round{{"round", r}, {"inquiries", json::array()}, {"messages", json::array()}};
        for (std::size_t q = 0; q < inquiries.size(); ++q) {
            const Bytes inq_bytes = inquiries[q].encode();
            round["inquiries"].push_back({{"id", result.inquiries.size()},
                                          {"target", ref_key({inquiries[q].targets[0].tx_id, inquiries[q].targets[0].index})},
                                          {"bytes", to_hex(inq_bytes)}});
            const std::size_t inq_id = result.inquiries.size();
            result.inquiries.push_back(inq_bytes);

            for (const auto &answer : act_witnesses(world, sc.policy, inquiries[q], rng)) {
                const Bytes bytes = encode_testimony(answer.testimony);
                result.testimonies.push_back(bytes);

                // Investigator side: only the bytes cross the channel.
                testimony::Verdict v;
                std::string kind = "malformed";
                try {
                    const Testimony received = testimony::decode_testimony(bytes);
                    kind = kind_of(received);
                    v = verify_testimony(world.ledger, inquiries[q], received);
                } catch (const DecodeError &e) {
                    v.reason = std::string("malformed: ") + e.what();
                }
                if (v.accepted) cs->apply(v.facts);
                json facts = json::array();
                for (const auto &f : v.facts) facts.push_back(testimony::describe(f.claim));
                const std::string digest = to_hex(sha256(bytes));
                round["messages"].push_back({{"inquiry", inq_id},
                                             {"kind", kind},
                                             {"bytes", to_hex(bytes)},
                                             {"digest", digest},
                                             {"accepted", v.accepted},
                                             {"reason", v.reason},
                                             {"facts", facts}});

                json anonymity = json::array();
                if (v.accepted) {
                    const auto &t = answer.testimony;
                    const std::size_t m = ledger::tx_refs(world.ledger.tx(inquiries[q].targets[0].tx_id)).size();
                    for (const auto &o : answer.witness_outputs) {
                        std::size_t after = 1;
                        if (const auto *g = std::get_if<testimony::JoinGroupTestimony>(&t)) {
                            for (const auto &e : g->entries)
                                if (e.tx_id == inquiries[q].targets[0].tx_id) after = e.inputs.size();
                        } else if (const auto *b = std::get_if<testimony::RingGroupBundle>(&t)) {
                            const auto image = crypto::key_image(crypto::KeyPair::from_secret(Holders(world).sk(o)));
                            after = investigation::witness_anonymity_set(*cs, o, b->members.front().phantom.ring,
                                                                         investigation::prior_spend_ring(world.ledger, image))
                                        .size();
                        } else if (const auto *p = std::get_if<testimony::RingPhantomTestimony>(&t)) {
                            after = p->claimed_role == testimony::Role::ring_forward
                                        ? p->phantom.ring.size()
                                        : investigation::witness_anonymity_set(*cs, o, {o}, std::nullopt).size();
                        }
                        anonymity.push_back({{"witness", ref_key(o)}, {"before", m}, {"after", after}});
                    }
                }
                truth["testimonies"].push_back({{"digest", digest},
                                                {"truthful", answer.truthful},
                                                {"witnesses", answer.witnesses},
                                                {"anonymity", anonymity}});
            }
        }

        const Size after = measure(*cs);
        round["suspects_before"] = before.suspects;
        round["suspects_after"] = after.suspects;
        round["reach_before"] = before.reach;
        round["reach_after"] = after.reach;
        rounds.push_back(round);

        const auto s = back ? investigation::backtrack_suspects(*cs, depth)
                            : investigation::forward_reach(*cs, investigation::ForwardOptions{depth, 0});
        truth["retained"].push_back(back ? s.terminals.contains(watch) : s.reached.contains(watch) || s.terminals.contains(watch));

        // Next layer: the mixing transactions behind (or after) every
        // candidate edge that is still feasible.
        std::vector<InquiryTarget> next;
        std::set<InquiryTarget> seen;
        auto add = [&](const InquiryTarget &t) {
            if (seen.insert(t).second) next.push_back(t);
        };
        for (const auto &t : targets) {
            if (back) {
                const auto refs = ledger::tx_refs(world.ledger.tx(t.tx_id));
                for (auto k : cs->funding_candidates(t.tx_id, t.index))
                    if (graph->mixin(refs[k].tx_id)) add({refs[k].tx_id, refs[k].index});
            } else {
                for (auto j : cs->funded_candidates(t.tx_id, t.index))
                    for (const auto &ref : graph->referenced_by({t.tx_id, j})) add({ref.tx, ref.position});
            }
        }
        targets = std::move(next);
        if (after.suspects <= 1) {
            termination = "singleton";
            break;
        }
    }

    json final_state{{"termination", termination}};
    if (cs) {
        const auto s = back ? investigation::backtrack_suspects(*cs, depth)
                            : investigation::forward_reach(*cs, investigation::ForwardOptions{depth, 0});
        json entities = json::array();
        for (const auto &e : s.entities) entities.push_back(ref_key(e));
        final_state["suspects"] = s.size();
        final_state["entities"] = entities;
        final_state["reach"] = s.reached.size();
        transcript["conflicts"] = conflicts_json(*cs);
    } else {
        final_state["suspects"] = 0;
        final_state["entities"] = json::array();
        final_state["reach"] = 0;
        transcript["conflicts"] = json::array();
    }
    transcript["rounds"] = rounds;
    transcript["final"] = final_state;
    transcript["ground_truth"] = truth;

    result.metrics = compute_metrics(transcript);
    result.transcript = std::move(transcript);
    result.final_ledger = world.ledger;
    return result;
}

}  // namespace cdk::simulation
