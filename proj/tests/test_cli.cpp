#include <doctest.h>

#include <cstdlib>
#include <sstream>

#include "ragfaith/cli.hpp"
#include "ragfaith/util.hpp"
#include "support.hpp"

using namespace ragfaith;
using testsupport::TempDir;
namespace fs = std::filesystem;

namespace {

struct CliResult {
    int code = 0;
    std::string out;
    std::string err;
};

CliResult cli(std::vector<std::string> args) {
    args.insert(args.begin(), "ragfaith");
    std::vector<const char*> argv;
    for (const auto& a : args) argv.push_back(a.c_str());
    std::ostringstream out, err;
    CliResult r;
    r.code = run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
    r.out = out.str();
    r.err = err.str();
    return r;
}

/// A writable copy of the end-to-end fixture.
struct Workspace {
    TempDir dir;
    fs::path config;

    Workspace() {
        fs::copy(testsupport::data_dir() / "fixtures" / "e2e", dir.path(),
                 fs::copy_options::recursive);
        config = dir.path() / "config.json";
    }
    fs::path operator/(const std::string& p) const { return dir.path() / p; }
    std::string cfg() const { return config.string(); }
    std::string dataset() const { return (dir.path() / "dataset.jsonl").string(); }
    std::string read(const std::string& p) const { return read_file(dir.path() / p); }
    json read_json(const std::string& p) const { return json::parse(read(p)); }
};

fs::path cli_fixture(const std::string& name) {
    return testsupport::data_dir() / "fixtures" / "cli" / name;
}

}  // namespace

TEST_CASE("index builds once and then reports up to date") {
    Workspace w;
    auto r = cli({"--config", w.cfg(), "index"});
    CHECK_MESSAGE(r.code == kExitOk, r.err);
    CHECK(fs::is_regular_file(w / "index/pages.idx"));
    CHECK(fs::is_regular_file(w / "index/snippets.idx"));
    CHECK(fs::is_regular_file(w / "index/manifest.json"));
    const auto first_calls = testsupport::count_provider_lines(w / "out/ledger.jsonl");
    CHECK(first_calls > 0);

    r = cli({"--config", w.cfg(), "index"});
    CHECK(r.code == kExitOk);
    CHECK(r.out.find("is up to date") != std::string::npos);
    CHECK(testsupport::count_provider_lines(w / "out/ledger.jsonl") == first_calls);
}

TEST_CASE("missing corpus is fatal") {
    Workspace w;
    fs::remove(w / "corpus.jsonl");
    const auto r = cli({"--config", w.cfg(), "index"});
    CHECK(r.code == kExitFatal);
    CHECK(r.err.find("error:") != std::string::npos);
}

TEST_CASE("usage errors exit 2") {
    CHECK(cli({}).code == kExitFatal);
    CHECK(cli({"eval"}).code == kExitFatal);
    CHECK(cli({"frobnicate"}).code == kExitFatal);
    CHECK(cli({"--help"}).code == kExitOk);
    Workspace w;
    CHECK(cli({"--config", w.cfg(), "--threshold", "150", "eval", "--dataset", w.dataset()}).code ==
          kExitFatal);
    CHECK(cli({"--config", (w / "nope.json").string(), "index"}).code == kExitFatal);
}

TEST_CASE("eval report matches the golden file and is stable") {
    Workspace w;
    REQUIRE(cli({"--config", w.cfg(), "index"}).code == kExitOk);
    auto r = cli({"--config", w.cfg(), "eval", "--dataset", w.dataset(), "--mode", "both"});
    CHECK_MESSAGE(r.code == kExitOk, r.out << r.err);
    const std::string report = w.read("out/report.json");
    CHECK(report == read_file(testsupport::data_dir() / "golden" / "e2e_report.json"));
    CHECK(w.read("out/report.csv") == read_file(testsupport::data_dir() / "golden" / "e2e_report.csv"));
    const json j = json::parse(report);
    CHECK(j["records"].size() == 12);
    CHECK(j["records"][0].contains("claim_support_ref"));
    CHECK(j["records"][0].contains("claim_support_kb"));
    const json stats = w.read_json("out/run_stats.json");
    CHECK(stats["provider_calls"].get<int>() > 0);

    // Warm cache, fresh checkpoint: no provider traffic, same bytes.
    fs::remove(w / "out/checkpoint.jsonl");
    fs::remove(w / "out/ledger.jsonl");
    r = cli({"--config", w.cfg(), "eval", "--dataset", w.dataset(), "--mode", "both"});
    CHECK(r.code == kExitOk);
    CHECK(w.read("out/report.json") == report);
    CHECK(testsupport::count_provider_lines(w / "out/ledger.jsonl") == 0);
    CHECK(w.read_json("out/run_stats.json")["provider_calls"] == 0);
}

TEST_CASE("interrupted eval resumes to the same report") {
    Workspace full, part;
    REQUIRE(cli({"--config", full.cfg(), "index"}).code == kExitOk);
    REQUIRE(cli({"--config", part.cfg(), "index"}).code == kExitOk);
    auto r = cli({"--config", full.cfg(), "eval", "--dataset", full.dataset(), "--mode", "both"});
    REQUIRE(r.code == kExitOk);

    r = cli({"--config", part.cfg(), "eval", "--dataset", part.dataset(), "--mode", "both",
             "--stop-after", "5"});
    CHECK(r.code == kExitPartial);
    CHECK(r.out.find("interrupted") != std::string::npos);
    CHECK_FALSE(fs::exists(part / "out/report.json"));
    // Tear the last checkpoint line as a crash mid-write would.
    const fs::path ckpt = part / "out/checkpoint.jsonl";
    std::string text = read_file(ckpt);
    text.resize(text.size() - 20);
    write_file_atomic(ckpt, text);

    r = cli({"--config", part.cfg(), "eval", "--dataset", part.dataset(), "--mode", "both"});
    CHECK(r.code == kExitOk);
    CHECK(r.out.find("(4 resumed)") != std::string::npos);
    CHECK(part.read("out/report.json") == full.read("out/report.json"));
}

TEST_CASE("eval rejects malformed datasets with a line number") {
    Workspace w;
    const auto r = cli({"--config", w.cfg(), "eval", "--dataset",
                        cli_fixture("bad_dataset.jsonl").string()});
    CHECK(r.code == kExitFatal);
    CHECK(r.err.find("bad_dataset.jsonl:2") != std::string::npos);
}

TEST_CASE("factuality needs an index") {
    Workspace w;
    const auto r = cli({"--config", w.cfg(), "eval", "--dataset", w.dataset(), "--mode", "factuality"});
    CHECK(r.code == kExitFatal);
    CHECK(r.err.find("ragfaith index") != std::string::npos);
}

TEST_CASE("generate answers from five retrieved passages") {
    Workspace w;
    REQUIRE(cli({"--config", w.cfg(), "index"}).code == kExitOk);
    const auto r =
        cli({"--config", w.cfg(), "generate", "--dataset", cli_fixture("questions.jsonl").string()});
    CHECK_MESSAGE(r.code == kExitOk, r.err);
    const auto lines = read_jsonl(w / "out/responses.jsonl");
    REQUIRE(lines.size() == 2);
    for (const auto& l : lines) {
        CHECK(l.value["passages"].size() == 5);
        CHECK_FALSE(l.value["response"].get<std::string>().empty());
    }
    CHECK(lines[0].value["id"] == "q1");
    CHECK(lines[1].value["evidence_source"] == "rag_passages");

    // Generated responses feed straight back into eval.
    const auto e = cli({"--config", w.cfg(), "eval", "--dataset", (w / "out/responses.jsonl").string()});
    CHECK_MESSAGE(e.code == kExitOk, e.out << e.err);
}

TEST_CASE("ift analysis and filtering") {
    Workspace w;
    const std::string ift = (testsupport::data_dir() / "fixtures" / "ift.jsonl").string();
    auto r = cli({"--config", w.cfg(), "analyze-ift", "--dataset", ift});
    CHECK_MESSAGE(r.code == kExitOk, r.err);
    const json report = w.read_json("out/ift_report.json");
    CHECK(report["total"] == 6);
    CHECK(w.read("out/ift_report.csv").find("expert,closed_ended,2,2.0,75\n") != std::string::npos);

    r = cli({"--config", w.cfg(), "analyze-ift", "--dataset", ift, "--rows", "expert/bogus"});
    CHECK(r.code == kExitFatal);
    CHECK(r.err.find("senior_expert/open_ended") != std::string::npos);

    r = cli({"--config", w.cfg(), "filter-ift", "--dataset", ift, "--exclude",
             "non_expert/open_ended_grounded"});
    CHECK(r.code == kExitOk);
    const auto kept = read_jsonl(w / "out/ift_filtered.jsonl");
    CHECK(kept.size() == 4);
    const json manifest = w.read_json("out/ift_filter_manifest.json");
    CHECK(manifest["total_before"] == 6);
    CHECK(manifest["total_after"] == 4);

    r = cli({"--config", w.cfg(), "analyze-ift", "--dataset", cli_fixture("empty.jsonl").string()});
    CHECK(r.code == kExitOk);
    CHECK(w.read_json("out/ift_report.json")["empty"] == true);
}

TEST_CASE("climate-fever verification") {
    Workspace w;
    const std::string cf = (testsupport::data_dir() / "fixtures" / "climate_fever_sample.jsonl").string();
    auto r = cli({"--config", w.cfg(), "verify-fever", "--dataset", cf});
    CHECK_MESSAGE(r.code == kExitOk, r.err);
    json j = w.read_json("out/fever_report.json");
    CHECK(j["filter"]["pairs_kept"] == 5);
    CHECK(j["filter"]["malformed_records"] == 1);
    CHECK(j["verification"]["n"] == 5);

    r = cli({"--config", w.cfg(), "verify-fever", "--dataset", cf, "--order", "unanimity-then-map"});
    CHECK(r.code == kExitOk);
    CHECK(w.read_json("out/fever_report.json")["filter"]["pairs_kept"] == 4);
    r = cli({"--config", w.cfg(), "verify-fever", "--dataset", cf, "--keep-disputed-claims"});
    CHECK(w.read_json("out/fever_report.json")["filter"]["pairs_kept"] == 6);
    r = cli({"--config", w.cfg(), "verify-fever", "--dataset", cf, "--order", "sideways"});
    CHECK(r.code == kExitFatal);
}

TEST_CASE("agreement with human labels") {
    Workspace w;
    auto r = cli({"--config", w.cfg(), "agreement", "--preds", cli_fixture("preds.jsonl").string(),
                  "--gold", cli_fixture("gold.jsonl").string()});
    CHECK_MESSAGE(r.code == kExitOk, r.err);
    const json j = w.read_json("out/agreement_report.json");
    CHECK(j["n"] == 4);
    CHECK(j["skipped_labels"] == 1);
    CHECK(j["overall_acc"].get<double>() == doctest::Approx(25.0));
    CHECK(j["acc_faithful"].get<double>() == doctest::Approx(100.0 / 3.0));
    CHECK(j["acc_not_faithful"].get<double>() == doctest::Approx(0.0));

    r = cli({"--config", w.cfg(), "agreement", "--preds", cli_fixture("empty.jsonl").string(),
             "--gold", cli_fixture("empty.jsonl").string()});
    CHECK(r.code == kExitOk);
    CHECK(w.read_json("out/agreement_report.json")["empty"] == true);
}

TEST_CASE("span-based hallucination rate") {
    Workspace w;
    auto r = cli({"--config", w.cfg(), "span-rate", "--dataset", cli_fixture("spans.jsonl").string()});
    CHECK_MESSAGE(r.code == kExitOk, r.err);
    const json j = w.read_json("out/span_rate.json");
    CHECK(j["n"] == 4);
    CHECK(j["hallucination_free_pct"].get<double>() == doctest::Approx(50.0));

    r = cli({"--config", w.cfg(), "span-rate", "--dataset", cli_fixture("spans_bad.jsonl").string()});
    CHECK(r.code == kExitFatal);
    CHECK(r.err.find("spans_bad.jsonl:2") != std::string::npos);

    r = cli({"--config", w.cfg(), "span-rate", "--dataset", cli_fixture("empty.jsonl").string()});
    CHECK(r.code == kExitOk);
    CHECK(w.read_json("out/span_rate.json")["empty"] == true);
}

TEST_CASE("installed binary runs") {
    TempDir dir;
    const std::string cmd = std::string("\"") + RAGFAITH_CLI + "\" --version > \"" +
                            (dir.path() / "v.txt").string() + "\"";
    CHECK(std::system(cmd.c_str()) == 0);
    CHECK_FALSE(read_file(dir.path() / "v.txt").empty());
}
