#include "cdk/cli.hpp"
#include "cdk/simulation.hpp"
#include "doctest.h"

#include <filesystem>
#include <fstream>
#include <sstream>

using namespace cdk;
namespace fs = std::filesystem;
using json = nlohmann::json;

namespace {

struct Result {
    int code;
    std::string out;
    std::string err;
};

Result cdk_cmd(std::vector<std::string> args)
{
    std::ostringstream out, err;
    const int code = cli::run(args, out, err);
    return {code, out.str(), err.str()};
}

fs::path scratch(const std::string &name)
{
    const fs::path p = fs::temp_directory_path() / ("cdk-cli-test-" + name);
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
}

std::string scenario_file(const std::string &name) { return std::string(CDK_SCENARIO_DIR) + "/" + name + ".json"; }

Bytes slurp(const fs::path &p)
{
    std::ifstream in(p, std::ios::binary);
    return Bytes(std::istreambuf_iterator<char>(in), {});
}

void spit(const fs::path &p, std::span<const std::uint8_t> b)
{
    std::ofstream(p, std::ios::binary).write(reinterpret_cast<const char *>(b.data()), static_cast<std::streamsize>(b.size()));
}

json load(const fs::path &p) { return json::parse(std::ifstream(p)); }

void write_config(const fs::path &p, const json &j) { std::ofstream(p) << j.dump(); }

// gen + run into dir/bundle and dir/out.
Result gen_run(const fs::path &dir, const std::string &config)
{
    const auto g = cdk_cmd({"gen", "--config", config, "--out", (dir / "bundle").string()});
    REQUIRE(g.code == 0);
    return cdk_cmd({"run", "--scenario", (dir / "bundle").string(), "--out", (dir / "out").string()});
}

// Files for the first message of the given kind.
struct MessageFiles {
    fs::path testimony, inquiry, ledger;
};

std::optional<MessageFiles> find_message(const fs::path &out, const std::string &kind)
{
    const json t = load(out / "transcript.json");
    std::size_t k = 0;
    for (const auto &round : t["rounds"]) {
        for (const auto &m : round["messages"]) {
            if (m["kind"] == kind && m["accepted"]) {
                char tst[16], inq[16];
                std::snprintf(tst, sizeof tst, "%03zu.tst", k);
                std::snprintf(inq, sizeof inq, "%03zu.inq", m["inquiry"].get<std::size_t>());
                return MessageFiles{out / "testimonies" / tst, out / "inquiries" / inq, out / "ledger.bin"};
            }
            ++k;
        }
    }
    return std::nullopt;
}

Result verify(const MessageFiles &f)
{
    return cdk_cmd({"verify", "--testimony", f.testimony.string(), "--ledger", f.ledger.string(), "--inquiry",
                    f.inquiry.string()});
}

}  // namespace

TEST_CASE("gen, run and report on every shipped scenario")
{
    for (const auto *name : {"fig1", "join-m3", "stolen-key", "cover-forward"}) {
        CAPTURE(name);
        const auto dir = scratch(name);
        const auto r = gen_run(dir, scenario_file(name));
        CHECK(r.code == 0);
        CHECK(r.out.find("termination: ") != std::string::npos);
        for (const auto *f : {"transcript.json", "metrics.json", "ledger.bin"}) CHECK(fs::exists(dir / "out" / f));
        const auto report = cdk_cmd({"report", "--transcript", (dir / "out" / "transcript.json").string()});
        CHECK(report.code == 0);
        CHECK(report.out.starts_with("round  inquiries"));
    }
}

TEST_CASE("gen")
{
    const auto dir = scratch("gen");
    SUBCASE("fig1 ledger has seven rings")
    {
        REQUIRE(cdk_cmd({"gen", "--config", scenario_file("fig1"), "--out", (dir / "a").string()}).code == 0);
        const auto l = ledger::Ledger::deserialize(slurp(dir / "a" / "ledger.bin"));
        std::size_t rings = 0;
        for (const auto &tx : l.transactions()) rings += ledger::tx_type(tx) == ledger::TxType::ring;
        CHECK(rings == 7);
        CHECK(load(dir / "a" / "public.json")["direction"] == "backtrack");
    }
    SUBCASE("same seed, same bundle")
    {
        for (const auto *sub : {"a", "b"})
            REQUIRE(cdk_cmd({"gen", "--config", scenario_file("join-m3"), "--seed", "99", "--out", (dir / sub).string()})
                        .code == 0);
        for (const auto *f : {"ledger.bin", "ground_truth.json", "scenario.json", "public.json"})
            CHECK(slurp(dir / "a" / f) == slurp(dir / "b" / f));
        CHECK(load(dir / "a" / "scenario.json")["seed"] == 99);
    }
    SUBCASE("invalid config exits 2")
    {
        json j = load(scenario_file("fig1"));
        j["policy"]["cooperate_probability"] = -1;
        write_config(dir / "bad.json", j);
        const auto r = cdk_cmd({"gen", "--config", (dir / "bad.json").string(), "--out", (dir / "x").string()});
        CHECK(r.code == 2);
        CHECK(r.err.find("cooperate_probability") != std::string::npos);
        CHECK(cdk_cmd({"gen", "--config", (dir / "none.json").string(), "--out", (dir / "x").string()}).code == 2);
        CHECK(cdk_cmd({"gen", "--bogus"}).code == 2);
    }
}

TEST_CASE("run")
{
    const auto dir = scratch("run");
    SUBCASE("full cooperation on a join identifies the source")
    {
        const auto r = gen_run(dir, scenario_file("join-m3"));
        CHECK(r.code == 0);
        CHECK(r.out.ends_with("suspects: 1\n"));
    }
    SUBCASE("zero cooperation leaves m^d suspects")
    {
        json j = load(scenario_file("fig1"));
        j["policy"]["cooperate_probability"] = 0.0;
        write_config(dir / "silent.json", j);
        const auto r = gen_run(dir, (dir / "silent.json").string());
        CHECK(r.code == 0);
        CHECK(r.out.ends_with("suspects: 8\n"));
    }
    SUBCASE("stolen key conflict is reported")
    {
        const auto r = gen_run(dir, scenario_file("stolen-key"));
        CHECK(r.out.find("conflicts: 1") != std::string::npos);
        CHECK(r.out.find("contested output") != std::string::npos);
    }
    SUBCASE("missing ground truth")
    {
        REQUIRE(cdk_cmd({"gen", "--config", scenario_file("fig1"), "--out", (dir / "bundle").string()}).code == 0);
        fs::remove(dir / "bundle" / "ground_truth.json");
        const auto r = cdk_cmd({"run", "--scenario", (dir / "bundle").string(), "--out", (dir / "out").string()});
        CHECK(r.code != 0);
        CHECK(r.err.find("ground_truth.json") != std::string::npos);
    }
}

TEST_CASE("verify")
{
    const auto dir = scratch("verify");
    REQUIRE(gen_run(dir, scenario_file("stolen-key")).code == 0);
    const auto files = find_message(dir / "out", "join individual");
    REQUIRE(files);

    SUBCASE("accepted")
    {
        const auto r = verify(*files);
        CHECK(r.code == 0);
        CHECK(r.out.starts_with("accepted: psi("));
    }
    SUBCASE("tampered signature")
    {
        auto t = std::get<testimony::JoinIndividualTestimony>(testimony::decode_testimony(slurp(files->testimony)));
        std::swap(t.sig_input, t.sig_output);
        spit(dir / "tampered.tst", testimony::encode_testimony(t));
        const auto r = verify({dir / "tampered.tst", files->inquiry, files->ledger});
        CHECK(r.code == 1);
        CHECK(r.out == "rejected: challenge mismatch\n");
    }
    SUBCASE("tampered inquiry")
    {
        auto inq = testimony::Inquiry::decode(slurp(files->inquiry));
        inq.narrative += "!";
        spit(dir / "tampered.inq", inq.encode());
        const auto r = verify({files->testimony, dir / "tampered.inq", files->ledger});
        CHECK(r.code == 1);
        CHECK(r.out == "rejected: inquiry signature\n");
    }
    SUBCASE("malformed bytes")
    {
        Bytes junk = slurp(files->testimony);
        junk.resize(junk.size() / 2);
        spit(dir / "junk.tst", junk);
        CHECK(verify({dir / "junk.tst", files->inquiry, files->ledger}).code == 2);
        CHECK(verify({dir / "absent.tst", files->inquiry, files->ledger}).code == 2);
    }
}

TEST_CASE("verify: duplicated phantom in a bundle is equivocation")
{
    const auto dir = scratch("bundle");
    json j = load(scenario_file("fig1"));
    j["world"]["entity_count"] = 12;
    j["world"]["coinbase_per_entity"] = 3;
    j["world"]["cascade"] = {{"direction", "backtrack"}, {"tx_type", "ring"}, {"depth", 1}, {"fanout", 1}, {"mixin", 5}};
    write_config(dir / "ring5.json", j);
    REQUIRE(gen_run(dir, (dir / "ring5.json").string()).code == 0);
    const auto files = find_message(dir / "out", "ring group");
    REQUIRE(files);
    CHECK(verify(*files).code == 0);

    auto b = std::get<testimony::RingGroupBundle>(testimony::decode_testimony(slurp(files->testimony)));
    REQUIRE(b.members.size() >= 2);
    b.members[1] = b.members[0];
    spit(dir / "dup.tst", testimony::encode_testimony(b));
    const auto r = verify({dir / "dup.tst", files->inquiry, files->ledger});
    CHECK(r.code == 1);
    CHECK(r.out == "rejected: equivocation\n");
}

TEST_CASE("report")
{
    const auto dir = scratch("report");
    REQUIRE(gen_run(dir, scenario_file("fig1")).code == 0);
    const auto transcript = (dir / "out" / "transcript.json").string();
    const auto rounds = load(transcript)["rounds"].size();

    SUBCASE("csv: header plus one row per round")
    {
        const auto r = cdk_cmd({"report", "--transcript", transcript, "--format", "csv"});
        CHECK(r.code == 0);
        std::istringstream lines(r.out);
        std::vector<std::string> rows;
        for (std::string line; std::getline(lines, line);) rows.push_back(line);
        REQUIRE(rows.size() == rounds + 1);
        CHECK(rows[0] == "round,inquiries,messages,accepted,rejected,suspects_before,suspects_after");
        CHECK(rows[1].starts_with("1,1,"));
        CHECK(rows[1].find(",8,") != std::string::npos);  // the fig1 cascade opens with eight suspects
    }
    SUBCASE("table adds metrics")
    {
        const auto r = cdk_cmd({"report", "--transcript", transcript, "--format", "table"});
        CHECK(r.code == 0);
        CHECK(r.out.find("final suspects: 1") != std::string::npos);
    }
    SUBCASE("empty transcript prints the header only")
    {
        json t = load(transcript);
        t["rounds"] = json::array();
        write_config(dir / "empty.json", t);
        const auto r = cdk_cmd({"report", "--transcript", (dir / "empty.json").string(), "--format", "csv"});
        CHECK(r.code == 0);
        CHECK(r.out == "round,inquiries,messages,accepted,rejected,suspects_before,suspects_after\n");
    }
    SUBCASE("unknown format exits 2")
    {
        CHECK(cdk_cmd({"report", "--transcript", transcript, "--format", "xml"}).code == 2);
    }
}

TEST_CASE("help and usage")
{
    CHECK(cdk_cmd({"--help"}).code == 0);
    CHECK(cdk_cmd({}).code == 2);
    CHECK(cdk_cmd({"frobnicate"}).code == 2);
}
