#include "cdk/simulation.hpp"

#include <cmath>
#include <set>

namespace cdk::simulation {

std::uint64_t Rng::below(std::uint64_t n)
{
    if (n == 0) throw std::invalid_argument("Rng::below(0)");
    // Largest multiple of n that fits, to avoid modulo bias.
    const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() - std::numeric_limits<std::uint64_t>::max() % n;
    std::uint64_t x;
    do {
        x = engine_();
    } while (x >= limit);
    return x % n;
}

bool Rng::chance(double p)
{
    const double u = static_cast<double>(engine_() >> 11) * 0x1.0p-53;
    return u < p;
}

crypto::Seed Rng::seed()
{
    crypto::Seed s{};
    for (std::size_t k = 0; k < s.size(); k += 8) {
        const std::uint64_t x = engine_();
        for (std::size_t b = 0; b < 8; ++b) s[k + b] = static_cast<std::uint8_t>(x >> (8 * b));
    }
    return s;
}

namespace {

// Reads an object while rejecting keys it does not know, so a misspelt
// field fails loudly instead of silently taking its default.
class Fields {
public:
    Fields(const json &j, std::string path) : j_(j), path_(std::move(path))
    {
        if (!j_.is_object()) throw ConfigError(path_ + ": expected an object");
    }

    template <typename T>
    void get(const char *key, T &out)
    {
        seen_.insert(key);
        if (!j_.contains(key)) return;
        try {
            out = j_.at(key).get<T>();
        } catch (const json::exception &) {
            throw ConfigError(path_ + "." + key + ": wrong type");
        }
    }

    const json *child(const char *key)
    {
        seen_.insert(key);
        return j_.contains(key) ? &j_.at(key) : nullptr;
    }

    std::string path(const char *key) const { return path_ + "." + key; }

    void finish() const
    {
        for (const auto &[key, _] : j_.items())
            if (!seen_.contains(key)) throw ConfigError(path_ + "." + key + ": unknown field");
    }

private:
    const json &j_;
    std::string path_;
    std::set<std::string> seen_;
};

template <typename Enum>
Enum parse_enum(const std::string &value, const std::string &path,
                std::initializer_list<std::pair<std::string_view, Enum>> options)
{
    for (const auto &[name, e] : options)
        if (value == name) return e;
    throw ConfigError(path + ": unknown value \"" + value + "\"");
}

const char *name(testimony::Direction d) { return d == testimony::Direction::backtrack ? "backtrack" : "forward"; }
const char *name(TxKind k) { return k == TxKind::ring ? "ring" : "join"; }
const char *name(TestimonyMode m) { return m == TestimonyMode::group ? "group" : "individual"; }

}  // namespace

Scenario parse_scenario(const json &j)
{
    Scenario s;
    Fields top(j, "scenario");
    std::string schema;
    top.get("schema", schema);
    if (schema != kScenarioSchema) throw ConfigError("scenario.schema: expected \"" + std::string(kScenarioSchema) + "\"");
    top.get("seed", s.seed);

    if (const json *w = top.child("world")) {
        Fields f(*w, "world");
        f.get("entity_count", s.world.entity_count);
        f.get("coinbase_per_entity", s.world.coinbase_per_entity);
        f.get("value_unit", s.world.value_unit);
        if (const json *b = f.child("background")) {
            Fields g(*b, f.path("background"));
            g.get("join_tx_count", s.world.background.join_tx_count);
            g.get("join_size", s.world.background.join_size);
            g.get("ring_tx_count", s.world.background.ring_tx_count);
            g.get("ring_size", s.world.background.ring_size);
            g.finish();
        }
        if (const json *c = f.child("cascade")) {
            Fields g(*c, f.path("cascade"));
            std::string direction = name(s.world.cascade.direction), type = name(s.world.cascade.tx_type);
            g.get("direction", direction);
            g.get("tx_type", type);
            s.world.cascade.direction =
                parse_enum<testimony::Direction>(direction, g.path("direction"),
                                                 {{"backtrack", testimony::Direction::backtrack},
                                                  {"forward", testimony::Direction::forward}});
            s.world.cascade.tx_type =
                parse_enum<TxKind>(type, g.path("tx_type"), {{"ring", TxKind::ring}, {"join", TxKind::join}});
            g.get("depth", s.world.cascade.depth);
            g.get("fanout", s.world.cascade.fanout);
            g.get("mixin", s.world.cascade.mixin);
            g.finish();
        }
        f.finish();
    }
    if (const json *p = top.child("policy")) {
        Fields f(*p, "policy");
        f.get("cooperate_probability", s.policy.cooperate_probability);
        f.get("key_loss_probability", s.policy.key_loss_probability);
        std::string mode = name(s.policy.testimony_mode);
        f.get("testimony_mode", mode);
        s.policy.testimony_mode = parse_enum<TestimonyMode>(
            mode, f.path("testimony_mode"), {{"group", TestimonyMode::group}, {"individual", TestimonyMode::individual}});
        if (const json *a = f.child("adversary")) {
            Fields g(*a, f.path("adversary"));
            g.get("stolen_key_false_alibi", s.policy.adversary.stolen_key_false_alibi);
            g.get("cover_tx_count", s.policy.adversary.cover_tx_count);
            g.finish();
        }
        f.finish();
    }
    if (const json *q = top.child("inquiry")) {
        Fields f(*q, "inquiry");
        f.get("case_id", s.inquiry.case_id);
        f.get("narrative", s.inquiry.narrative);
        f.get("max_depth", s.inquiry.max_depth);
        f.get("max_rounds", s.inquiry.max_rounds);
        f.finish();
    }
    top.finish();
    validate(s);
    return s;
}

json to_json(const Scenario &s)
{
    const auto &w = s.world;
    return json{
        {"schema", kScenarioSchema},
        {"seed", s.seed},
        {"world",
         {{"entity_count", w.entity_count},
          {"coinbase_per_entity", w.coinbase_per_entity},
          {"value_unit", w.value_unit},
          {"background",
           {{"join_tx_count", w.background.join_tx_count},
            {"join_size", w.background.join_size},
            {"ring_tx_count", w.background.ring_tx_count},
            {"ring_size", w.background.ring_size}}},
          {"cascade",
           {{"direction", name(w.cascade.direction)},
            {"tx_type", name(w.cascade.tx_type)},
            {"depth", w.cascade.depth},
            {"fanout", w.cascade.fanout},
            {"mixin", w.cascade.mixin}}}}},
        {"policy",
         {{"cooperate_probability", s.policy.cooperate_probability},
          {"key_loss_probability", s.policy.key_loss_probability},
          {"testimony_mode", name(s.policy.testimony_mode)},
          {"adversary",
           {{"stolen_key_false_alibi", s.policy.adversary.stolen_key_false_alibi},
            {"cover_tx_count", s.policy.adversary.cover_tx_count}}}}},
        {"inquiry",
         {{"case_id", s.inquiry.case_id},
          {"narrative", s.inquiry.narrative},
          {"max_depth", s.inquiry.max_depth},
          {"max_rounds", s.inquiry.max_rounds}}},
    };
}

void validate(const Scenario &s)
{
    const auto &w = s.world;
    const auto &c = w.cascade;
    auto require = [](bool ok, const std::string &msg) {
        if (!ok) throw ConfigError(msg);
    };
    require(w.entity_count >= 2, "world.entity_count: need at least 2 entities");
    require(w.coinbase_per_entity >= 1, "world.coinbase_per_entity: must be positive");
    require(w.value_unit >= 1, "world.value_unit: must be positive");
    require(w.background.join_size >= 2, "world.background.join_size: must be at least 2");
    require(w.background.ring_size >= 2, "world.background.ring_size: must be at least 2");
    require(w.background.join_tx_count == 0 || w.background.join_size <= w.entity_count - 1,
            "world.background.join_size: more participants than entities");
    require(c.depth >= 1, "world.cascade.depth: must be at least 1");
    require(c.mixin >= 2, "world.cascade.mixin: must be at least 2");
    require(c.fanout >= 1 && c.fanout <= c.mixin, "world.cascade.fanout: must be in [1, mixin]");
    double leaves = std::pow(static_cast<double>(c.fanout), static_cast<double>(c.depth));
    require(leaves <= 4096, "world.cascade: fanout^depth exceeds 4096");
    require(s.policy.cooperate_probability >= 0 && s.policy.cooperate_probability <= 1,
            "policy.cooperate_probability: must be in [0, 1]");
    require(s.policy.key_loss_probability >= 0 && s.policy.key_loss_probability <= 1,
            "policy.key_loss_probability: must be in [0, 1]");
    require(!s.policy.adversary.stolen_key_false_alibi ||
                (c.tx_type == TxKind::join && c.direction == testimony::Direction::backtrack),
            "policy.adversary.stolen_key_false_alibi: needs a backtracking join cascade");
    require(w.coinbase_per_entity >= 1 + s.policy.adversary.cover_tx_count,
            "policy.adversary.cover_tx_count: the perpetrator needs one coin per cover transaction");
    require(s.inquiry.max_rounds >= 1, "inquiry.max_rounds: must be at least 1");
    require(!s.inquiry.case_id.empty(), "inquiry.case_id: must not be empty");
}

}  // namespace cdk::simulation
