#include "cdk/testimony.hpp"

namespace cdk::testimony {

namespace {

std::string set_string(const std::vector<std::uint32_t> &values)
{
    std::string out = "{";
    for (std::size_t k = 0; k < values.size(); ++k) {
        if (k) out += ",";
        out += std::to_string(values[k]);
    }
    return out + "}";
}

}  // namespace

std::optional<TxId> claim_tx(const Claim &claim)
{
    return std::visit(
        [](const auto &c) -> std::optional<TxId> {
            if constexpr (std::is_same_v<std::decay_t<decltype(c)>, KeyImageDisclosure>) {
                return std::nullopt;
            } else {
                return c.tx;
            }
        },
        claim);
}

std::string describe(const Claim &claim)
{
    if (const auto *c = std::get_if<JoinRelation>(&claim)) {
        return "psi(" + std::to_string(c->output) + ")=" + std::to_string(c->input);
    }
    if (const auto *c = std::get_if<JoinExclusion>(&claim)) {
        if (c->outputs.size() == 1 && c->inputs.size() == 1) {
            return "psi(" + std::to_string(c->outputs[0]) + ")!=" + std::to_string(c->inputs[0]);
        }
        if (c->outputs.size() == 1) {
            return "psi(" + std::to_string(c->outputs[0]) + ") not in " + set_string(c->inputs);
        }
        return "psi(j) not in " + set_string(c->inputs) + " for j in " + set_string(c->outputs);
    }
    if (const auto *c = std::get_if<RingExclusion>(&claim)) {
        if (c->members.size() == 1) {
            return "sigma!=" + std::to_string(c->members[0]);
        }
        return "sigma not in " + set_string(c->members);
    }
    if (const auto *c = std::get_if<RingForwardExclusion>(&claim)) {
        return "sigma!=" + std::to_string(c->member);
    }
    if (const auto *c = std::get_if<RingInclusion>(&claim)) {
        if (c->members.size() == 1) {
            return "sigma=" + std::to_string(c->members[0]);
        }
        return "sigma in " + set_string(c->members);
    }
    const auto &d = std::get<KeyImageDisclosure>(claim);
    return "key image of " + ledger::to_string(d.output) + " disclosed";
}

}  // namespace cdk::testimony
