#include "cdk/cli.hpp"

#include "cdk/simulation.hpp"

#include "CLI11.hpp"

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>

namespace cdk::cli {

namespace fs = std::filesystem;
using simulation::json;

namespace {

// Bad input: unreadable or malformed files, invalid configurations.
struct InputError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

Bytes read_file(const fs::path &p)
{
    std::ifstream in(p, std::ios::binary);
    if (!in) throw InputError("cannot read " + p.string());
    return Bytes(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

json read_json(const fs::path &p)
{
    const Bytes raw = read_file(p);
    try {
        return json::parse(raw.begin(), raw.end());
    } catch (const json::parse_error &e) {
        throw InputError(p.string() + ": " + e.what());
    }
}

void write_file(const fs::path &p, std::span<const std::uint8_t> data)
{
    std::ofstream out(p, std::ios::binary | std::ios::trunc);
    out.write(reinterpret_cast<const char *>(data.data()), static_cast<std::streamsize>(data.size()));
    if (!out) throw InputError("cannot write " + p.string());
}

void write_json(const fs::path &p, const json &j)
{
    const std::string text = j.dump(2) + "\n";
    write_file(p, as_bytes(text));
}

std::string numbered(std::size_t k, const char *ext)
{
    char buf[32];
    std::snprintf(buf, sizeof buf, "%03zu.%s", k, ext);
    return buf;
}

json ref_json(const ledger::OutputRef &r) { return json{{"tx", to_hex(r.tx_id)}, {"index", r.index}}; }

int cmd_gen(const std::string &config, std::optional<std::uint64_t> seed, const fs::path &out_dir, std::ostream &out)
{
    simulation::Scenario sc = simulation::parse_scenario(read_json(config));
    if (seed) sc.seed = *seed;
    const simulation::World world = simulation::generate_world(sc);

    fs::create_directories(out_dir);
    write_json(out_dir / "scenario.json", simulation::to_json(sc));
    write_file(out_dir / "ledger.bin", world.ledger.serialize());
    write_json(out_dir / "ground_truth.json", simulation::ground_truth_to_json(world));
    write_json(out_dir / "public.json",
               json{{"schema", "CDK/v1/public"},
                    {"lea_pk", to_hex(simulation::lea_keypair(sc).pk.bytes())},
                    {"case_id", sc.inquiry.case_id},
                    {"direction", std::string(to_string(sc.world.cascade.direction))},
                    {"flow", ref_json(world.flow)}});
    out << "wrote " << out_dir.string() << ": " << world.ledger.size() << " transactions\n";
    return 0;
}

int cmd_run(const fs::path &scenario, const fs::path &out_dir, std::ostream &out)
{
    const fs::path bundle = fs::is_directory(scenario) ? scenario : scenario.parent_path();
    if (!fs::exists(bundle / "ground_truth.json"))
        throw InputError("missing ground truth file " + (bundle / "ground_truth.json").string());
    const auto sc = simulation::parse_scenario(read_json(bundle / "scenario.json"));
    simulation::World world;
    try {
        world = simulation::world_from_files(read_file(bundle / "ledger.bin"), read_json(bundle / "ground_truth.json"));
    } catch (const DecodeError &e) {
        throw InputError(e.what());
    }
    const auto result = simulation::run_scenario(std::move(world), sc);

    fs::create_directories(out_dir / "inquiries");
    fs::create_directories(out_dir / "testimonies");
    write_json(out_dir / "transcript.json", result.transcript);
    write_json(out_dir / "metrics.json", result.metrics);
    write_file(out_dir / "ledger.bin", result.final_ledger.serialize());
    for (std::size_t k = 0; k < result.inquiries.size(); ++k)
        write_file(out_dir / "inquiries" / numbered(k, "inq"), result.inquiries[k]);
    for (std::size_t k = 0; k < result.testimonies.size(); ++k)
        write_file(out_dir / "testimonies" / numbered(k, "tst"), result.testimonies[k]);
    out << simulation::summary_table(result.transcript);
    return 0;
}

int cmd_verify(const fs::path &testimony_path, const fs::path &ledger_path, const fs::path &inquiry_path,
               std::ostream &out, std::ostream &err)
{
    testimony::Testimony tst;
    testimony::Inquiry inq;
    ledger::Ledger ledger;
    try {
        tst = testimony::decode_testimony(read_file(testimony_path));
        inq = testimony::Inquiry::decode(read_file(inquiry_path));
        ledger = ledger::Ledger::deserialize(read_file(ledger_path));
    } catch (const InputError &) {
        throw;
    } catch (const std::exception &e) {
        err << "malformed input: " << e.what() << '\n';
        return 2;
    }
    if (!testimony::verify_inquiry(inq, inq.lea_pk)) {
        out << "rejected: inquiry signature\n";
        return 1;
    }
    const auto v = testimony::verify_testimony(ledger, inq, tst);
    if (!v.accepted) {
        out << "rejected: " << v.reason << '\n';
        return 1;
    }
    out << "accepted:";
    for (std::size_t k = 0; k < v.facts.size(); ++k) out << (k ? ", " : " ") << testimony::describe(v.facts[k].claim);
    out << '\n';
    return 0;
}

int cmd_report(const fs::path &transcript_path, const std::string &format, std::ostream &out)
{
    const json t = read_json(transcript_path);
    if (!t.is_object()) throw InputError("transcript is not an object");
    const bool empty = !t.contains("rounds") || t.at("rounds").empty();
    std::vector<std::vector<std::string>> rows;
    try {
        rows = empty ? simulation::round_rows(json{{"rounds", json::array()}}) : simulation::round_rows(t);
    } catch (const json::exception &e) {
        throw InputError(std::string("malformed transcript: ") + e.what());
    }

    if (format == "csv") {
        for (const auto &row : rows) {
            for (std::size_t k = 0; k < row.size(); ++k) out << (k ? "," : "") << row[k];
            out << '\n';
        }
        return 0;
    }
    for (const auto &row : rows) {
        for (std::size_t k = 0; k < row.size(); ++k) {
            const std::size_t width = std::max(rows.front()[k].size(), row[k].size());
            out << (k ? "  " : "") << std::string(width - row[k].size(), ' ') << row[k];
        }
        out << '\n';
    }
    if (empty) return 0;

    json m;
    try {
        m = simulation::compute_metrics(t);
    } catch (const json::exception &e) {
        throw InputError(std::string("malformed transcript: ") + e.what());
    }
    out << "final suspects: " << m.at("final_suspects").get<std::size_t>() << '\n';
    out << "rounds to singleton: "
        << (m.at("rounds_to_singleton").is_null() ? std::string("none")
                                                   : std::to_string(m.at("rounds_to_singleton").get<std::size_t>()))
        << '\n';
    out << "conflicts: " << m.at("conflicts").get<std::size_t>() << '\n';
    out << "false accusations: " << m.at("false_accusations").get<std::size_t>()
        << " (false testimonies " << m.at("false_testimonies").get<std::size_t>() << ", averted "
        << m.at("false_accusations_averted").get<std::size_t>() << ")\n";
    if (m.at("cover_inflation").is_null()) {
        out << "cover inflation: n/a\n";
    } else {
        char buf[32];
        std::snprintf(buf, sizeof buf, "%.3f", m.at("cover_inflation").get<double>());
        out << "cover inflation: " << buf << '\n';
    }
    out << "anonymity sets (witness: before -> after):\n";
    for (const auto &a : m.at("anonymity"))
        out << "  " << a.at("witness").get<std::string>().substr(0, 12) << ":"
            << a.at("witness").get<std::string>().substr(a.at("witness").get<std::string>().find(':') + 1) << "  "
            << a.at("before").get<std::size_t>() << " -> " << a.at("after").get<std::size_t>() << '\n';
    return 0;
}

}  // namespace

int run(const std::vector<std::string> &args, std::ostream &out, std::ostream &err)
{
    CLI::App app{"Investigate mixed cryptocurrency flows with voluntary witness testimonies", "cdk"};
    app.require_subcommand(1, 1);

    std::string config, gen_out;
    std::optional<std::uint64_t> seed;
    auto *gen = app.add_subcommand("gen", "Generate a scenario bundle from a configuration");
    gen->add_option("--config", config, "Scenario configuration (JSON)")->required();
    gen->add_option("--seed", seed, "Override the configured seed");
    gen->add_option("--out", gen_out, "Bundle directory")->required();

    std::string scenario, run_out;
    auto *run_cmd = app.add_subcommand("run", "Run a generated scenario");
    run_cmd->add_option("--scenario", scenario, "Bundle directory (or a file inside it)")->required();
    run_cmd->add_option("--out", run_out, "Output directory")->required();

    std::string tst, ledger_path, inquiry;
    auto *verify = app.add_subcommand("verify", "Verify one testimony against a ledger and an inquiry");
    verify->add_option("--testimony", tst, "Testimony file")->required();
    verify->add_option("--ledger", ledger_path, "Ledger file")->required();
    verify->add_option("--inquiry", inquiry, "Inquiry file")->required();

    std::string transcript, format = "table";
    auto *report = app.add_subcommand("report", "Summarize a transcript");
    report->add_option("--transcript", transcript, "Transcript file")->required();
    report->add_option("--format", format, "table or csv")->check(CLI::IsMember({"table", "csv"}));

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
        app.parse(reversed);
    } catch (const CLI::CallForHelp &) {
        out << app.help();
        return 0;
    } catch (const CLI::CallForAllHelp &) {
        out << app.help("", CLI::AppFormatMode::All);
        return 0;
    } catch (const CLI::ParseError &e) {
        err << "cdk: " << e.what() << '\n';
        return 2;
    }

    try {
        if (*gen) return cmd_gen(config, seed, gen_out, out);
        if (*run_cmd) return cmd_run(scenario, run_out, out);
        if (*verify) return cmd_verify(tst, ledger_path, inquiry, out, err);
        return cmd_report(transcript, format, out);
    } catch (const InputError &e) {
        err << "cdk: " << e.what() << '\n';
    } catch (const simulation::ConfigError &e) {
        err << "cdk: invalid configuration: " << e.what() << '\n';
    } catch (const DecodeError &e) {
        err << "cdk: malformed input: " << e.what() << '\n';
    } catch (const fs::filesystem_error &e) {
        err << "cdk: " << e.what() << '\n';
    }
    return 2;
}

}  // namespace cdk::cli
