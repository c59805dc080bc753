#include <doctest.h>

#include <random>

#include "ragfaith/error.hpp"
#include "ragfaith/pipeline.hpp"
#include "ragfaith/vector_index.hpp"
#include "support.hpp"

using namespace ragfaith;
using testsupport::ScriptedLLM;
using testsupport::TempDir;

namespace {

Judge mock_judge(std::shared_ptr<CallLedger> ledger = nullptr) {
    JudgeOptions o;
    o.retry.initial_backoff = std::chrono::milliseconds(0);
    return Judge(std::make_shared<MockJudgeProvider>(), std::make_shared<ResponseCache>(),
                 ledger ? ledger : std::make_shared<CallLedger>(), o);
}

EvaluationRecord rag_record(std::string id, std::string response,
                            std::vector<std::string> passages) {
    EvaluationRecord r;
    r.id = std::move(id);
    r.question = "What happens?";
    r.response = std::move(response);
    for (auto& p : passages) r.passages.push_back({"Source", 2020, std::move(p)});
    return r;
}

std::vector<ScoredClaim> verdicts(std::size_t supported, std::size_t total) {
    std::vector<ScoredClaim> out(total);
    for (std::size_t i = 0; i < total; ++i) out[i].verdict = i < supported ? 1 : 0;
    return out;
}

EvaluationRecord scored(const std::string& id, std::size_t supported, std::size_t total) {
    EvaluationRecord r;
    r.id = id;
    r.question = "q";
    r.response = "r";
    r.claims = ClaimSet{"q", "r", std::vector<std::string>(total, "c")};
    r.faithfulness = verdicts(supported, total);
    return r;
}

std::shared_ptr<Retriever> retriever_over(std::vector<std::string> pages) {
    std::vector<Document> docs;
    std::vector<std::vector<std::string>> per_doc;
    for (std::size_t i = 0; i < pages.size(); ++i) {
        docs.push_back({"d" + std::to_string(i), "Doc " + std::to_string(i), 2000, "", ""});
        per_doc.push_back({pages[i]});
    }
    auto kb = std::make_shared<const KnowledgeBase>(
        KnowledgeBase::build(docs, per_doc, IngestionConfig{}));
    auto e = std::make_shared<HashingEmbedder>();
    std::shared_ptr<const VectorIndex> pi, si;
    if (kb->empty()) {
        pi = si = std::make_shared<const VectorIndex>();
    } else {
        pi = std::make_shared<const VectorIndex>(build_index(*kb, *e, Granularity::page));
        si = std::make_shared<const VectorIndex>(build_index(*kb, *e, Granularity::snippet));
    }
    return std::make_shared<Retriever>(kb, pi, si, e, RetrievalSettings{});
}

}  // namespace

TEST_CASE("reference context per evidence source") {
    EvaluationRecord r = rag_record("a", "x", {"first", "second"});
    r.passages[1].year.reset();
    CHECK(*reference_context(r) == "\"Source\", 2020\nfirst\n\n\"Source\", n.d.\nsecond");
    CHECK(*reference_context(r, {false}) == "first\n\nsecond");
    r.passages.clear();
    CHECK_FALSE(reference_context(r).has_value());
    r.evidence_source = EvidenceSource::full_prompt;
    r.prompt = "the prompt";
    CHECK(*reference_context(r) == "the prompt");
    r.evidence_source = EvidenceSource::provided_paragraphs;
    r.paragraphs = {"p1", "p2"};
    CHECK(*reference_context(r) == "p1\n\np2");
}

TEST_CASE("mock judge brackets faithfulness") {
    Judge judge = mock_judge();
    const std::string passage = "Sea levels rise. Glaciers melt. Forests burn.";
    SUBCASE("verbatim copy") {
        auto r = rag_record("a", passage, {passage});
        evaluate_faithfulness(r, judge);
        CHECK(*record_support(*r.faithfulness) == 100.0);
    }
    SUBCASE("disjoint") {
        auto r = rag_record("a", "Penguins dance. Volcanoes sing.", {passage});
        evaluate_faithfulness(r, judge);
        CHECK(*record_support(*r.faithfulness) == 0.0);
    }
    SUBCASE("three of five") {
        auto r = rag_record("a", passage + " Penguins dance. Volcanoes sing.", {passage});
        evaluate_faithfulness(r, judge);
        REQUIRE(r.faithfulness->size() == 5);
        CHECK(*record_support(*r.faithfulness) == 60.0);
    }
}

TEST_CASE("property: mixed responses lie between the brackets") {
    std::mt19937_64 rng(9);
    Judge judge = mock_judge();
    for (int trial = 0; trial < 30; ++trial) {
        std::vector<std::string> inside, outside;
        for (int i = 0; i < 4; ++i) {
            inside.push_back("Alpha" + testsupport::random_text(rng, 3, 20) + ".");
            outside.push_back("Zulu" + std::to_string(trial) + "x" + std::to_string(i) + " omega.");
        }
        std::string passage;
        for (auto& s : inside) passage += s + " ";
        std::string response;
        const int n_in = std::uniform_int_distribution<int>(0, 4)(rng);
        const int n_out = std::uniform_int_distribution<int>(n_in == 0 ? 1 : 0, 4)(rng);
        for (int i = 0; i < n_in; ++i) response += inside[i] + " ";
        for (int i = 0; i < n_out; ++i) response += outside[i] + " ";
        auto r = rag_record("m", response, {passage});
        evaluate_faithfulness(r, judge);
        const double s = *record_support(*r.faithfulness);
        CHECK(s == doctest::Approx(100.0 * n_in / (n_in + n_out)));
    }
}

TEST_CASE("claims are decomposed once and shared by both evaluations") {
    auto ledger = std::make_shared<CallLedger>();
    Judge judge = mock_judge(ledger);
    auto retriever = retriever_over({"Glaciers melt in summer.", "Oceans absorb heat."});
    auto r = rag_record("a", "Glaciers melt in summer. Oceans absorb heat.", {"Glaciers melt in summer."});
    evaluate_faithfulness(r, judge);
    evaluate_factuality(r, judge, *retriever, 1);
    REQUIRE(r.factuality->size() == r.faithfulness->size());
    // One decomposition, one faithfulness batch, one factuality call per claim.
    CHECK(ledger->provider_calls() == 4);
    CHECK((*r.faithfulness)[1].verdict == 0);
    CHECK((*r.factuality)[0].verdict == 1);
    CHECK((*r.factuality)[1].verdict == 1);
    CHECK((*r.factuality)[1].evidence_ids == std::vector<std::string>{"d1:0:0"});
}

TEST_CASE("factuality against an empty knowledge base") {
    Judge judge = mock_judge();
    auto retriever = retriever_over({});
    auto r = rag_record("a", "Ice melts. Seas rise.", {});
    evaluate_factuality(r, judge, *retriever);
    REQUIRE(r.factuality->size() == 2);
    for (const auto& c : *r.factuality) {
        CHECK(c.verdict == 0);
        CHECK(c.reason == kNoEvidenceReason);
    }
}

TEST_CASE("empty responses and decomposition failures are flagged") {
    Judge judge = mock_judge();
    auto empty = rag_record("e", "   ", {"x"});
    evaluate_faithfulness(empty, judge);
    CHECK(empty.status == "empty_response");
    CHECK_FALSE(empty.faithfulness.has_value());

    JudgeOptions o;
    o.retry.initial_backoff = std::chrono::milliseconds(0);
    Judge broken(std::make_shared<ScriptedLLM>(std::vector<std::string>{"a", "b", "c"}), nullptr,
                 nullptr, o);
    auto r = rag_record("f", "Something.", {"x"});
    evaluate_faithfulness(r, broken);
    CHECK(r.status.rfind("decompose_failed", 0) == 0);

    const auto report = aggregate_report({empty, r});
    CHECK(report.empty());
    CHECK(report.empty_responses == 1);
    CHECK(report.decompose_failures == 1);
    CHECK_FALSE(report.ref.macro.has_value());
}

TEST_CASE("aggregation arithmetic") {
    SUBCASE("macro and micro differ") {
        const auto report = aggregate_report({scored("a", 1, 1), scored("b", 33, 99)});
        CHECK(*report.ref.macro == doctest::Approx((100.0 + 100.0 / 3.0) / 2.0).epsilon(1e-12));
        CHECK(*report.ref.micro == doctest::Approx(34.0).epsilon(1e-12));
        CHECK(*report.avg_claims == 50.0);
        CHECK(report.ref.claims_verified == 100);
        CHECK(headline_pct(report.ref.headline(Averaging::macro)) == 67);
        CHECK(headline_pct(report.ref.headline(Averaging::micro)) == 34);
    }
    SUBCASE("headline rounding") {
        const auto report = aggregate_report({scored("a", 4, 10), scored("b", 12, 20)});
        CHECK(*report.avg_claims == 15.0);
        CHECK(headline_pct(report.ref.macro) == 50);
        CHECK(headline_avg_claims(1.7272) == 1.7);
        CHECK(headline_avg_claims(2.25) == 2.3);
    }
    SUBCASE("vacuous, failed and missing evidence") {
        auto vacuous = scored("v", 0, 0);
        auto failed = scored("f", 1, 3);
        (*failed.faithfulness)[2].verdict.reset();
        (*failed.faithfulness)[2].failure = "gave up";
        auto no_ref = scored("n", 0, 2);
        no_ref.faithfulness.reset();
        const auto report = aggregate_report({vacuous, failed, no_ref});
        CHECK(report.ref.vacuous == 1);
        CHECK(report.ref.claims_failed == 1);
        CHECK(report.ref.not_applicable == 1);
        CHECK(report.ref.records_scored == 1);
        CHECK(*report.ref.macro == 50.0);
        CHECK(*report.avg_claims == doctest::Approx(5.0 / 3.0));
    }
}

TEST_CASE("record json round trip") {
    Judge judge = mock_judge();
    auto retriever = retriever_over({"Glaciers melt in summer."});
    auto r = rag_record("a", "Glaciers melt in summer. Oceans boil.", {"Glaciers melt."});
    evaluate_faithfulness(r, judge);
    evaluate_factuality(r, judge, *retriever);
    const json j = record_to_json(r);
    CHECK(record_to_json(record_from_json(j)).dump() == j.dump());
    CHECK(j["binary_faithful"] == false);
    CHECK(j["claim_support_ref"] == 0.0);
}

TEST_CASE("dataset schema errors name the line") {
    TempDir dir;
    const auto p = dir / "d.jsonl";
    write_file_atomic(p, "{\"id\":\"a\",\"question\":\"q\",\"response\":\"r\"}\n"
                         "{\"id\":\"b\",\"question\":\"q\"}\n");
    try {
        (void)load_dataset(p);
        FAIL("accepted");
    } catch (const ValidationError& e) {
        CHECK(std::string(e.what()).find("d.jsonl:2:") != std::string::npos);
    }
    write_file_atomic(p, "{\"id\":\"a\",\"question\":\"q\",\"response\":\"r\"}\n"
                         "{\"id\":\"a\",\"question\":\"q\",\"response\":\"s\"}\n");
    CHECK_THROWS_AS(load_dataset(p), ValidationError);
    write_file_atomic(p, "{\"id\":\"a\",\"question\":\"q\",\"response\":\"r\",\"evidence_source\":\"web\"}\n");
    CHECK_THROWS_AS(load_dataset(p), ValidationError);
}

namespace {

std::vector<EvaluationRecord> batch(std::size_t n) {
    std::vector<EvaluationRecord> out;
    for (std::size_t i = 0; i < n; ++i) {
        out.push_back(rag_record("r" + std::to_string(i),
                                 "Ice melts. Fact " + std::to_string(i) + " holds.",
                                 {"Ice melts. Fact " + std::to_string(i % 3) + " holds."}));
    }
    return out;
}

std::string report_bytes(const std::vector<EvaluationRecord>& records) {
    return report_to_json(aggregate_report(records), records, json::object(), 50.0).dump(2);
}

}  // namespace

TEST_CASE("runner resumes from a checkpoint and reproduces the report") {
    TempDir dir;
    RunOptions options;
    options.checkpoint = dir / "ck.jsonl";
    options.fingerprint = "run-1";
    options.concurrency = 3;

    Judge j1 = mock_judge();
    RunOptions plain = options;
    plain.checkpoint.clear();
    const auto reference = run_evaluation(batch(10), j1, nullptr, plain);
    CHECK_FALSE(reference.interrupted);

    auto ledger = std::make_shared<CallLedger>();
    Judge j2 = mock_judge(ledger);
    RunOptions first = options;
    first.stop_after = 4;
    const auto partial = run_evaluation(batch(10), j2, nullptr, first);
    CHECK(partial.interrupted);
    // Simulate a crash in the middle of writing the last checkpoint line.
    std::string content = read_file(options.checkpoint);
    write_file_atomic(options.checkpoint, content.substr(0, content.size() - 25));

    Judge j3 = mock_judge();
    const auto resumed = run_evaluation(batch(10), j3, nullptr, options);
    CHECK_FALSE(resumed.interrupted);
    CHECK(resumed.resumed == 3);
    CHECK(report_bytes(resumed.records) == report_bytes(reference.records));

    const auto lines = read_jsonl(options.checkpoint);
    CHECK(lines.size() == 11);

    RunOptions other = options;
    other.fingerprint = "run-2";
    Judge j4 = mock_judge();
    CHECK(run_evaluation(batch(10), j4, nullptr, other).resumed == 0);
}

TEST_CASE("factuality mode requires a retriever") {
    Judge judge = mock_judge();
    RunOptions options;
    options.mode = EvalMode::both;
    CHECK_THROWS_AS(run_evaluation(batch(1), judge, nullptr, options), ConfigError);
}

TEST_CASE("report json and csv") {
    const std::vector<EvaluationRecord> records{scored("a", 1, 2), scored("b", 2, 2)};
    const auto report = aggregate_report(records);
    const json j = report_to_json(report, records, {{"k", 1}}, 50.0);
    CHECK(j["headline"]["claim_support_ref_pct"] == 75);
    CHECK(j["headline"]["claim_support_kb_pct"].is_null());
    CHECK(j["config"]["k"] == 1);
    CHECK(j["empty"] == false);
    CHECK(j["records"][0]["binary_faithful"] == false);
    CHECK(headline_csv(report) ==
          "n_records,avg_claims,claim_support_ref_pct,claim_support_kb_pct\n2,2.0,75,-\n");
}
