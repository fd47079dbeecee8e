#include "cdk/simulation.hpp"

#include <algorithm>
#include <set>
#include <sstream>

namespace cdk::simulation {

json compute_metrics(const json &transcript)
{
    const json &rounds = transcript.at("rounds");
    const json &truth = transcript.at("ground_truth");

    json per_round = json::array();
    json to_singleton = nullptr;
    std::size_t accepted = 0, rejected = 0;
    for (const auto &r : rounds) {
        per_round.push_back(r.at("suspects_after"));
        if (to_singleton.is_null() && r.at("suspects_after").get<std::size_t>() == 1) to_singleton = r.at("round");
        for (const auto &m : r.at("messages")) (m.at("accepted").get<bool>() ? accepted : rejected)++;
    }

    std::set<std::string> implicated;
    for (const auto &c : transcript.at("conflicts"))
        for (const auto &d : c.at("testimonies")) implicated.insert(d.get<std::string>());

    json anonymity = json::array();
    std::size_t false_testimonies = 0, averted = 0;
    for (const auto &t : truth.at("testimonies")) {
        for (const auto &a : t.at("anonymity")) anonymity.push_back(a);
        if (!t.at("truthful").get<bool>()) {
            ++false_testimonies;
            if (implicated.contains(t.at("digest").get<std::string>())) ++averted;
        }
    }
    std::size_t false_accusations = 0;
    for (const auto &kept : truth.at("retained"))
        if (!kept.get<bool>()) ++false_accusations;

    json inflation = nullptr;
    if (transcript.contains("ledger_extension")) {
        const auto &x = transcript.at("ledger_extension");
        const double before = x.at("before").at("reach").get<double>();
        const double after = x.at("after").at("reach").get<double>();
        if (before > 0) inflation = after / before;
    }

    return json{{"schema", kMetricsSchema},
                {"final_suspects", transcript.at("final").at("suspects")},
                {"termination", transcript.at("final").at("termination")},
                {"rounds", rounds.size()},
                {"rounds_to_singleton", to_singleton},
                {"suspects_per_round", per_round},
                {"messages_accepted", accepted},
                {"messages_rejected", rejected},
                {"conflicts", transcript.at("conflicts").size()},
                {"false_testimonies", false_testimonies},
                {"false_accusations", false_accusations},
                {"false_accusations_averted", averted},
                {"cover_inflation", inflation},
                {"anonymity", anonymity}};
}

std::vector<std::vector<std::string>> round_rows(const json &transcript)
{
    std::vector<std::vector<std::string>> rows{
        {"round", "inquiries", "messages", "accepted", "rejected", "suspects_before", "suspects_after"}};
    for (const auto &r : transcript.at("rounds")) {
        std::size_t ok = 0;
        for (const auto &m : r.at("messages"))
            if (m.at("accepted").get<bool>()) ++ok;
        const std::size_t n = r.at("messages").size();
        rows.push_back({std::to_string(r.at("round").get<std::size_t>()), std::to_string(r.at("inquiries").size()),
                        std::to_string(n), std::to_string(ok), std::to_string(n - ok),
                        std::to_string(r.at("suspects_before").get<std::size_t>()),
                        std::to_string(r.at("suspects_after").get<std::size_t>())});
    }
    return rows;
}

std::string summary_table(const json &transcript)
{
    std::ostringstream out;
    // Right-aligned columns, each as wide as its header.
    const auto rows = round_rows(transcript);
    for (const auto &row : rows) {
        for (std::size_t k = 0; k < row.size(); ++k) {
            const std::size_t width = std::max(rows.front()[k].size(), row[k].size());
            out << (k ? "  " : "") << std::string(width - row[k].size(), ' ') << row[k];
        }
        out << '\n';
    }
    const auto &conflicts = transcript.at("conflicts");
    out << "conflicts: " << conflicts.size() << '\n';
    for (const auto &c : conflicts) {
        out << "  " << c.at("tx").get<std::string>().substr(0, 12) << ' ' << c.at("kind").get<std::string>();
        if (!c.at("output").is_null()) out << " (output " << c.at("output").get<std::uint32_t>() << ")";
        out << ":";
        for (const auto &d : c.at("testimonies")) out << ' ' << d.get<std::string>().substr(0, 12);
        out << '\n';
    }
    if (transcript.contains("ledger_extension")) {
        const auto &x = transcript.at("ledger_extension");
        out << "ledger extended by " << x.at("transactions_added").get<std::size_t>() << " transactions: reach "
            << x.at("before").at("reach").get<std::size_t>() << " -> " << x.at("after").at("reach").get<std::size_t>()
            << '\n';
    }
    out << "termination: " << transcript.at("final").at("termination").get<std::string>() << '\n';
    out << "suspects: " << transcript.at("final").at("suspects").get<std::size_t>() << '\n';
    return out.str();
}

}  // namespace cdk::simulation
