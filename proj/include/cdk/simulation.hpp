#pragma once

// Seeded worlds and the scenario loop: the investigator publishes signed
// inquiries, simulated witnesses answer (or not) according to policy, and
// the engine narrows the suspect set round by round. Every run is a pure
// function of the scenario and its seed.

#include "cdk/investigation.hpp"
#include "cdk/world_oracle.hpp"

#include "json.hpp"

#include <cstdint>
#include <optional>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

namespace cdk::simulation {

using json = nlohmann::json;
using ledger::EntityId;
using ledger::Ledger;
using ledger::OutputRef;
using ledger::TxId;
using ledger::WorldOracle;

class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// mt19937_64 with draws defined here rather than by the standard library's
/// distributions, so streams are identical across toolchains.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    std::uint64_t next() { return engine_(); }
    /// Uniform in [0, n); n must be positive.
    std::uint64_t below(std::uint64_t n);
    /// True with probability p, using 53 random bits.
    bool chance(double p);
    crypto::Seed seed();

    template <typename T>
    void shuffle(std::vector<T> &v)
    {
        for (std::size_t k = v.size(); k > 1; --k) std::swap(v[k - 1], v[below(k)]);
    }

private:
    std::mt19937_64 engine_;
};

enum class TxKind { ring, join };
enum class TestimonyMode { group, individual };

struct BackgroundConfig {
    std::size_t join_tx_count = 0;
    std::size_t join_size = 3;
    std::size_t ring_tx_count = 0;
    std::size_t ring_size = 11;
};

/// The investigated flow: a complete tree of mixing transactions. Each
/// transaction has `mixin` inputs, `fanout` of which continue the tree; the
/// rest are fresh coins (joins) or decoys (rings).
struct CascadeConfig {
    testimony::Direction direction = testimony::Direction::backtrack;
    TxKind tx_type = TxKind::ring;
    std::size_t depth = 3;
    std::size_t fanout = 2;
    std::size_t mixin = 2;
};

struct WorldConfig {
    std::size_t entity_count = 16;
    std::size_t coinbase_per_entity = 4;
    std::uint64_t value_unit = 1000;
    BackgroundConfig background;
    CascadeConfig cascade;
};

struct AdversaryConfig {
    bool stolen_key_false_alibi = false;
    std::size_t cover_tx_count = 0;
};

struct PolicyConfig {
    double cooperate_probability = 1.0;
    double key_loss_probability = 0.0;
    TestimonyMode testimony_mode = TestimonyMode::group;
    AdversaryConfig adversary;
};

struct InquirySpec {
    std::string case_id = "case-1";
    std::string narrative;
    std::size_t max_depth = 0;  // 0: the cascade depth
    std::size_t max_rounds = 16;
};

struct Scenario {
    WorldConfig world;
    PolicyConfig policy;
    InquirySpec inquiry;
    std::uint64_t seed = 1;

    std::size_t depth_bound() const { return inquiry.max_depth ? inquiry.max_depth : world.cascade.depth; }
};

inline constexpr std::string_view kScenarioSchema = "CDK/v1/scenario";
inline constexpr std::string_view kTranscriptSchema = "CDK/v1/transcript";
inline constexpr std::string_view kGroundTruthSchema = "CDK/v1/ground-truth";
inline constexpr std::string_view kMetricsSchema = "CDK/v1/metrics";

/// Throws ConfigError naming the offending field.
Scenario parse_scenario(const json &j);
json to_json(const Scenario &s);
void validate(const Scenario &s);

struct World {
    Ledger ledger;
    WorldOracle oracle;
    EntityId perpetrator = 0;
    std::optional<EntityId> victim;           // stolen-key scenario
    std::optional<crypto::GroupElement> stolen_pk;  // victim key the perpetrator holds
    OutputRef flow;          // cash-out (backtrack) or dirty origin (forward)
    OutputRef true_endpoint; // true source coin (backtrack) or final destination (forward)
};

/// Throws ConfigError when the configuration cannot be realized.
World generate_world(const Scenario &scenario);

/// The oracle half of a world, for the file marked ground truth.
json ground_truth_to_json(const World &world);
World world_from_files(std::span<const std::uint8_t> ledger_bytes, const json &ground_truth);

/// Investigator key of a scenario; its public half is published.
crypto::KeyPair lea_keypair(const Scenario &scenario);

/// Adversarial ring transaction spending an unrelated perpetrator coin with
/// `flow` among its decoys. Returns its id.
TxId inject_cover_tx(World &world, const OutputRef &flow, std::size_t ring_size, Rng &rng);

/// One message a simulated key holder sends in answer to an inquiry, with
/// the ground truth the investigator never sees.
struct WitnessAnswer {
    testimony::Testimony testimony;
    bool truthful = true;
    std::vector<EntityId> witnesses;
    std::vector<OutputRef> witness_outputs;  // the input or ring member each witness speaks for
};

/// Each key holder of the targeted transaction draws key loss and
/// willingness, then testifies as the inquiry direction allows: cooperators
/// form one group, spenders of backtracked rings testify alone, and the
/// perpetrator only ever sends the stolen-key false alibi.
std::vector<WitnessAnswer> act_witnesses(const World &world, const PolicyConfig &policy,
                                         const testimony::Inquiry &inquiry, Rng &rng);

struct RunResult {
    json transcript;
    json metrics;
    Ledger final_ledger;
    std::vector<Bytes> inquiries;    // encoded, in publication order
    std::vector<Bytes> testimonies;  // encoded, in arrival order
};

RunResult run_scenario(World world, const Scenario &scenario);

/// Computed from the transcript alone.
json compute_metrics(const json &transcript);

/// Per-round rows: round, inquiries, messages, accepted, rejected,
/// suspects_before, suspects_after.
std::vector<std::vector<std::string>> round_rows(const json &transcript);
std::string summary_table(const json &transcript);

}  // namespace cdk::simulation
