#include "ragfaith/pipeline.hpp"

#include <cmath>
#include <fstream>
#include <map>
#include <mutex>
#include <set>

#include "ragfaith/error.hpp"
#include "ragfaith/metrics.hpp"
#include "ragfaith/worker_pool.hpp"

namespace ragfaith {

namespace fs = std::filesystem;

std::string to_string(EvidenceSource s) {
    switch (s) {
        case EvidenceSource::rag_passages: return "rag_passages";
        case EvidenceSource::full_prompt: return "full_prompt";
        case EvidenceSource::provided_paragraphs: return "provided_paragraphs";
    }
    return "rag_passages";
}

EvidenceSource evidence_source_from_string(const std::string& s) {
    if (s == "rag_passages") return EvidenceSource::rag_passages;
    if (s == "full_prompt") return EvidenceSource::full_prompt;
    if (s == "provided_paragraphs") return EvidenceSource::provided_paragraphs;
    throw ValidationError("unknown evidence_source \"" + s +
                          "\" (expected rag_passages, full_prompt or provided_paragraphs)");
}

std::string to_string(Averaging a) { return a == Averaging::macro ? "macro" : "micro"; }

Averaging averaging_from_string(const std::string& s) {
    if (s == "macro") return Averaging::macro;
    if (s == "micro") return Averaging::micro;
    throw ConfigError("unknown averaging mode \"" + s + "\" (expected macro or micro)");
}

std::string to_string(EvalMode m) {
    switch (m) {
        case EvalMode::faithfulness: return "faithfulness";
        case EvalMode::factuality: return "factuality";
        case EvalMode::both: return "both";
    }
    return "faithfulness";
}

EvalMode eval_mode_from_string(const std::string& s) {
    if (s == "faithfulness") return EvalMode::faithfulness;
    if (s == "factuality") return EvalMode::factuality;
    if (s == "both") return EvalMode::both;
    throw ConfigError("unknown mode \"" + s + "\" (expected faithfulness, factuality or both)");
}

namespace {

std::string passage_block(const std::string& title, const std::optional<int>& year,
                          const std::string& content, bool headers) {
    if (!headers || title.empty()) {
        return content;
    }
    return "\"" + title + "\", " + year_or_nd(year) + "\n" + content;
}

std::string join_blocks(const std::vector<std::string>& blocks) {
    std::string out;
    for (std::size_t i = 0; i < blocks.size(); ++i) {
        if (i > 0) out += "\n\n";
        out += blocks[i];
    }
    return out;
}

}  // namespace

std::optional<std::string> reference_context(const EvaluationRecord& record,
                                             const EvidenceOptions& options) {
    switch (record.evidence_source) {
        case EvidenceSource::rag_passages: {
            if (record.passages.empty()) return std::nullopt;
            std::vector<std::string> blocks;
            for (const auto& p : record.passages) {
                blocks.push_back(passage_block(p.title, p.year, p.content, options.headers));
            }
            return join_blocks(blocks);
        }
        case EvidenceSource::full_prompt: {
            const std::string& p = record.prompt.empty() ? record.question : record.prompt;
            if (trim(p).empty()) return std::nullopt;
            return p;
        }
        case EvidenceSource::provided_paragraphs:
            if (record.paragraphs.empty()) return std::nullopt;
            return join_blocks(record.paragraphs);
    }
    return std::nullopt;
}

bool ensure_claims(EvaluationRecord& record, Judge& judge) {
    if (record.claims) {
        return true;
    }
    if (trim(record.response).empty()) {
        record.status = "empty_response";
        return false;
    }
    if (record.status.rfind("decompose_failed", 0) == 0) {
        return false;
    }
    try {
        const std::string& q = record.question.empty() ? record.prompt : record.question;
        record.claims = judge.decompose(q.empty() ? std::string("(no question)") : q,
                                        record.response);
    } catch (const JudgeFailure& e) {
        record.status = std::string("decompose_failed: ") + e.what();
        return false;
    }
    return true;
}

namespace {

ScoredClaim to_scored(const std::string& claim, const ClaimOutcome& outcome) {
    ScoredClaim s;
    s.claim = claim;
    if (outcome.verdict) {
        s.verdict = outcome.verdict->verdict;
        s.reason = outcome.verdict->reason;
    } else {
        s.failure = outcome.failure;
    }
    return s;
}

}  // namespace

void evaluate_faithfulness(EvaluationRecord& record, Judge& judge, const EvidenceOptions& options) {
    if (!ensure_claims(record, judge)) {
        return;
    }
    const auto context = reference_context(record, options);
    if (!context) {
        record.faithfulness.reset();
        return;
    }
    const auto& claims = record.claims->claims;
    std::vector<ScoredClaim> scored;
    if (!claims.empty()) {
        const auto outcomes = judge.verify(*context, claims);
        for (std::size_t i = 0; i < claims.size(); ++i) {
            scored.push_back(to_scored(claims[i], outcomes[i]));
        }
    }
    record.faithfulness = std::move(scored);
}

void evaluate_factuality(EvaluationRecord& record, Judge& judge, const Retriever& retriever,
                         std::size_t k, const EvidenceOptions& options) {
    if (!ensure_claims(record, judge)) {
        return;
    }
    const auto& kb = retriever.kb();
    std::vector<ScoredClaim> scored;
    for (const auto& claim : record.claims->claims) {
        ScoredClaim s;
        s.claim = claim;
        EvidenceSet evidence;
        try {
            evidence = retriever.retrieve_for_claim(claim, k);
        } catch (const std::exception& e) {
            s.failure = std::string("retrieval failed: ") + e.what();
            scored.push_back(std::move(s));
            continue;
        }
        if (evidence.no_evidence()) {
            s.verdict = 0;
            s.reason = kNoEvidenceReason;
            scored.push_back(std::move(s));
            continue;
        }
        std::vector<std::string> blocks;
        for (const auto& r : evidence.results) {
            const Snippet& snip = kb.snippets()[r.snippet_index];
            const Document* doc = kb.find_document(snip.doc_id);
            blocks.push_back(passage_block(doc ? doc->title : "", doc ? doc->year : std::nullopt,
                                           snip.text, options.headers));
            s.evidence_ids.push_back(r.snippet.str());
        }
        const auto outcome = judge.verify(join_blocks(blocks), {claim});
        const ScoredClaim judged = to_scored(claim, outcome.at(0));
        s.verdict = judged.verdict;
        s.reason = judged.reason;
        s.failure = judged.failure;
        scored.push_back(std::move(s));
    }
    record.factuality = std::move(scored);
}

std::optional<double> record_support(const std::vector<ScoredClaim>& claims) {
    std::vector<int> verdicts;
    for (const auto& c : claims) {
        if (c.verdict) verdicts.push_back(*c.verdict);
    }
    if (verdicts.empty()) return std::nullopt;
    return claim_support(verdicts);
}

namespace {

void accumulate(SupportSummary& s, const std::optional<std::vector<ScoredClaim>>& claims,
                double& macro_sum) {
    if (!claims) {
        ++s.not_applicable;
        return;
    }
    if (claims->empty()) {
        ++s.vacuous;
        return;
    }
    std::size_t verified = 0;
    std::size_t supported = 0;
    for (const auto& c : *claims) {
        if (c.verdict) {
            ++verified;
            supported += static_cast<std::size_t>(*c.verdict);
        } else {
            ++s.claims_failed;
        }
    }
    if (verified == 0) {
        return;
    }
    ++s.records_scored;
    s.claims_verified += verified;
    s.claims_supported += supported;
    macro_sum += 100.0 * static_cast<double>(supported) / static_cast<double>(verified);
}

void finish(SupportSummary& s, double macro_sum) {
    if (s.records_scored > 0) {
        s.macro = macro_sum / static_cast<double>(s.records_scored);
        s.micro = 100.0 * static_cast<double>(s.claims_supported) /
                  static_cast<double>(s.claims_verified);
    }
}

}  // namespace

EvaluationReport aggregate_report(const std::vector<EvaluationRecord>& records,
                                  Averaging averaging) {
    EvaluationReport r;
    r.averaging = averaging;
    r.n_records = records.size();
    double claim_sum = 0.0;
    double ref_sum = 0.0;
    double kb_sum = 0.0;
    for (const auto& rec : records) {
        if (rec.status == "empty_response") ++r.empty_responses;
        if (rec.status.rfind("decompose_failed", 0) == 0) ++r.decompose_failures;
        if (!rec.claims) continue;
        ++r.n_decomposed;
        claim_sum += static_cast<double>(rec.claims->claims.size());
        accumulate(r.ref, rec.faithfulness, ref_sum);
        accumulate(r.kb, rec.factuality, kb_sum);
    }
    if (r.n_decomposed > 0) {
        r.avg_claims = claim_sum / static_cast<double>(r.n_decomposed);
    }
    finish(r.ref, ref_sum);
    finish(r.kb, kb_sum);
    return r;
}

std::optional<long> headline_pct(const std::optional<double>& pct) {
    if (!pct) return std::nullopt;
    return std::lround(*pct);
}

std::optional<double> headline_avg_claims(const std::optional<double>& avg) {
    if (!avg) return std::nullopt;
    return std::round(*avg * 10.0) / 10.0;
}

// --- record I/O ---------------------------------------------------------------

namespace {

std::string req_string(const json& j, const char* key) {
    if (!j.contains(key) || !j[key].is_string()) {
        throw ValidationError(std::string("field \"") + key + "\" must be a string");
    }
    return j[key].get<std::string>();
}

std::optional<int> opt_year(const json& j) {
    if (!j.contains("year") || j["year"].is_null()) return std::nullopt;
    if (j["year"].is_number_integer()) return j["year"].get<int>();
    if (j["year"].is_string()) {
        const std::string s = trim(j["year"].get<std::string>());
        if (s.empty() || s == "n.d.") return std::nullopt;
        try {
            return std::stoi(s);
        } catch (const std::exception&) {
        }
    }
    throw ValidationError("passage year must be an integer");
}

json scored_to_json(const std::vector<ScoredClaim>& claims) {
    json arr = json::array();
    for (const auto& c : claims) {
        json j = {{"claim", c.claim},
                  {"verdict", c.verdict ? json(*c.verdict) : json(nullptr)},
                  {"reason", c.reason}};
        if (!c.failure.empty()) j["failure"] = c.failure;
        if (!c.evidence_ids.empty()) j["evidence_ids"] = c.evidence_ids;
        arr.push_back(std::move(j));
    }
    return arr;
}

std::vector<ScoredClaim> scored_from_json(const json& arr) {
    std::vector<ScoredClaim> out;
    for (const auto& j : arr) {
        ScoredClaim c;
        c.claim = j.at("claim").get<std::string>();
        if (!j.at("verdict").is_null()) c.verdict = j["verdict"].get<int>();
        c.reason = j.value("reason", "");
        c.failure = j.value("failure", "");
        if (j.contains("evidence_ids")) {
            c.evidence_ids = j["evidence_ids"].get<std::vector<std::string>>();
        }
        out.push_back(std::move(c));
    }
    return out;
}

json opt_number(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

}  // namespace

EvaluationRecord record_from_input_json(const json& j) {
    if (!j.is_object()) throw ValidationError("record must be a JSON object");
    EvaluationRecord r;
    r.id = req_string(j, "id");
    if (r.id.empty()) throw ValidationError("field \"id\" must not be empty");
    r.question = j.contains("question") ? req_string(j, "question") : "";
    r.response = req_string(j, "response");
    if (j.contains("passages") && !j["passages"].is_null()) {
        if (!j["passages"].is_array()) throw ValidationError("\"passages\" must be an array");
        for (const auto& p : j["passages"]) {
            if (!p.is_object()) throw ValidationError("passage must be an object");
            r.passages.push_back({p.value("title", ""), opt_year(p), req_string(p, "content")});
        }
    }
    if (j.contains("evidence_source") && !j["evidence_source"].is_null()) {
        r.evidence_source = evidence_source_from_string(req_string(j, "evidence_source"));
    }
    if (j.contains("prompt")) r.prompt = req_string(j, "prompt");
    if (j.contains("paragraphs")) {
        if (!j["paragraphs"].is_array()) throw ValidationError("\"paragraphs\" must be an array");
        for (const auto& p : j["paragraphs"]) {
            if (!p.is_string()) throw ValidationError("paragraphs must be strings");
            r.paragraphs.push_back(p.get<std::string>());
        }
    }
    if (r.question.empty() && r.prompt.empty()) {
        throw ValidationError("record needs a question or a prompt");
    }
    return r;
}

std::vector<EvaluationRecord> load_dataset(const fs::path& path) {
    std::vector<EvaluationRecord> out;
    std::set<std::string> ids;
    for (const auto& line : read_jsonl(path)) {
        try {
            out.push_back(record_from_input_json(line.value));
        } catch (const ValidationError& e) {
            throw ValidationError(path.string() + ":" + std::to_string(line.line_no) + ": " +
                                  e.what());
        }
        if (!ids.insert(out.back().id).second) {
            throw ValidationError(path.string() + ":" + std::to_string(line.line_no) +
                                  ": duplicate record id " + out.back().id);
        }
    }
    return out;
}

json record_to_json(const EvaluationRecord& r, double threshold_pct) {
    json passages = json::array();
    for (const auto& p : r.passages) {
        passages.push_back({{"title", p.title},
                            {"year", p.year ? json(*p.year) : json(nullptr)},
                            {"content", p.content}});
    }
    json j = {{"id", r.id},
              {"question", r.question},
              {"response", r.response},
              {"passages", passages},
              {"evidence_source", to_string(r.evidence_source)},
              {"prompt", r.prompt},
              {"paragraphs", r.paragraphs},
              {"status", r.status}};
    j["claims"] = r.claims ? json(r.claims->claims) : json(nullptr);
    j["faithfulness"] = r.faithfulness ? scored_to_json(*r.faithfulness) : json(nullptr);
    j["factuality"] = r.factuality ? scored_to_json(*r.factuality) : json(nullptr);
    std::optional<double> ref;
    std::optional<double> kb;
    if (r.faithfulness) ref = record_support(*r.faithfulness);
    if (r.factuality) kb = record_support(*r.factuality);
    j["claim_support_ref"] = opt_number(ref);
    j["claim_support_kb"] = opt_number(kb);
    j["binary_faithful"] = ref ? json(binary_faithful(*ref, threshold_pct)) : json(nullptr);
    return j;
}

EvaluationRecord record_from_json(const json& j) {
    EvaluationRecord r = record_from_input_json(j);
    r.status = j.value("status", "");
    if (j.contains("claims") && !j["claims"].is_null()) {
        r.claims = ClaimSet{r.question.empty() ? r.prompt : r.question, r.response,
                            j["claims"].get<std::vector<std::string>>()};
    }
    if (j.contains("faithfulness") && !j["faithfulness"].is_null()) {
        r.faithfulness = scored_from_json(j["faithfulness"]);
    }
    if (j.contains("factuality") && !j["factuality"].is_null()) {
        r.factuality = scored_from_json(j["factuality"]);
    }
    return r;
}

namespace {

json summary_to_json(const SupportSummary& s) {
    return {{"macro_pct", opt_number(s.macro)},       {"micro_pct", opt_number(s.micro)},
            {"records_scored", s.records_scored},     {"claims_verified", s.claims_verified},
            {"claims_supported", s.claims_supported}, {"claims_failed", s.claims_failed},
            {"vacuous", s.vacuous},                   {"not_applicable", s.not_applicable}};
}

json opt_long(const std::optional<long>& v) { return v ? json(*v) : json(nullptr); }

}  // namespace

json report_to_json(const EvaluationReport& report, const std::vector<EvaluationRecord>& records,
                    const json& config_echo, double threshold_pct) {
    json rows = json::array();
    for (const auto& r : records) {
        json full = record_to_json(r, threshold_pct);
        json row = {{"id", r.id},
                    {"status", r.status},
                    {"n_claims", r.claims ? json(r.claims->claims.size()) : json(nullptr)},
                    {"faithfulness", full["faithfulness"]},
                    {"factuality", full["factuality"]},
                    {"claim_support_ref", full["claim_support_ref"]},
                    {"claim_support_kb", full["claim_support_kb"]},
                    {"binary_faithful", full["binary_faithful"]}};
        rows.push_back(std::move(row));
    }
    const auto avg = headline_avg_claims(report.avg_claims);
    return {{"tool", "ragfaith"},
            {"version", std::string(kToolVersion)},
            {"config", config_echo},
            {"empty", report.empty()},
            {"headline",
             {{"n_records", report.n_decomposed},
              {"avg_claims", avg ? json(*avg) : json(nullptr)},
              {"claim_support_ref_pct", opt_long(headline_pct(report.ref.headline(report.averaging)))},
              {"claim_support_kb_pct", opt_long(headline_pct(report.kb.headline(report.averaging)))},
              {"averaging", to_string(report.averaging)}}},
            {"summary",
             {{"n_records", report.n_records},
              {"n_decomposed", report.n_decomposed},
              {"avg_claims", opt_number(report.avg_claims)},
              {"empty_responses", report.empty_responses},
              {"decompose_failures", report.decompose_failures},
              {"ref", summary_to_json(report.ref)},
              {"kb", summary_to_json(report.kb)}}},
            {"records", rows}};
}

std::string headline_csv(const EvaluationReport& report) {
    auto cell = [](const std::optional<long>& v) { return v ? std::to_string(*v) : std::string("-"); };
    const auto avg = headline_avg_claims(report.avg_claims);
    std::string out = "n_records,avg_claims,claim_support_ref_pct,claim_support_kb_pct\n";
    out += std::to_string(report.n_decomposed) + "," + (avg ? format_fixed(*avg, 1) : "-") + "," +
           cell(headline_pct(report.ref.headline(report.averaging))) + "," +
           cell(headline_pct(report.kb.headline(report.averaging))) + "\n";
    return out;
}

// --- batch runner -------------------------------------------------------------

namespace {

std::map<std::string, json> load_checkpoint(const fs::path& path, const std::string& fingerprint) {
    std::map<std::string, json> done;
    if (path.empty() || !fs::exists(path)) {
        return done;
    }
    // A torn final line from an interrupted write is skipped.
    const auto lines = read_jsonl_lenient(path, [](std::size_t, const std::string&) {});
    if (lines.empty() || !lines.front().value.is_object() ||
        lines.front().value.value("fingerprint", "") != fingerprint) {
        fs::remove(path);
        return done;
    }
    for (std::size_t i = 1; i < lines.size(); ++i) {
        const auto& v = lines[i].value;
        if (v.is_object() && v.contains("id") && v["id"].is_string()) {
            done[v["id"].get<std::string>()] = v;
        }
    }
    return done;
}

}  // namespace

RunResult run_evaluation(std::vector<EvaluationRecord> records, Judge& judge,
                         const Retriever* retriever, const RunOptions& options) {
    const bool want_ref = options.mode != EvalMode::factuality;
    const bool want_kb = options.mode != EvalMode::faithfulness;
    if (want_kb && retriever == nullptr) {
        throw ConfigError("factuality evaluation needs a knowledge base and indices");
    }

    RunResult result;
    auto done = load_checkpoint(options.checkpoint, options.fingerprint);
    std::vector<std::size_t> todo;
    for (std::size_t i = 0; i < records.size(); ++i) {
        auto it = done.find(records[i].id);
        if (it != done.end()) {
            records[i] = record_from_json(it->second);
            ++result.resumed;
        } else {
            todo.push_back(i);
        }
    }

    std::ofstream checkpoint;
    std::mutex checkpoint_mu;
    if (!options.checkpoint.empty()) {
        if (options.checkpoint.has_parent_path()) {
            fs::create_directories(options.checkpoint.parent_path());
        }
        // Rewritten from the surviving records so appends never follow a torn line.
        std::string contents =
            json{{"checkpoint_version", 1}, {"fingerprint", options.fingerprint}}.dump() + "\n";
        for (const auto& r : records) {
            auto it = done.find(r.id);
            if (it != done.end()) contents += it->second.dump() + "\n";
        }
        write_file_atomic(options.checkpoint, contents);
        checkpoint.open(options.checkpoint, std::ios::app | std::ios::binary);
        if (!checkpoint) {
            throw ConfigError("cannot open checkpoint " + options.checkpoint.string());
        }
    }

    std::atomic<std::size_t> claimed{0};
    std::atomic<std::size_t> completed{0};
    parallel_for(todo.size(), options.concurrency, [&](std::size_t t) {
        if (options.stop_after && claimed.fetch_add(1) >= *options.stop_after) {
            return;
        }
        EvaluationRecord& rec = records[todo[t]];
        try {
            if (want_ref) evaluate_faithfulness(rec, judge, options.evidence);
            if (want_kb) evaluate_factuality(rec, judge, *retriever, options.k, options.evidence);
        } catch (const std::exception& e) {
            rec.status = std::string("error: ") + e.what();
        }
        ++completed;
        if (checkpoint.is_open()) {
            const std::string line = record_to_json(rec, options.threshold_pct).dump();
            std::lock_guard lock(checkpoint_mu);
            checkpoint << line << '\n';
            checkpoint.flush();
        }
    });
    result.interrupted = completed.load() < todo.size();
    result.records = std::move(records);
    return result;
}

}  // namespace ragfaith
