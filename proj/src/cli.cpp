#include "ragfaith/cli.hpp"

#include <CLI11.hpp>

#include <fstream>
#include <map>
#include <memory>
#include <set>

#include "ragfaith/config.hpp"
#include "ragfaith/datasets.hpp"
#include "ragfaith/error.hpp"
#include "ragfaith/metrics.hpp"
#include "ragfaith/pipeline.hpp"
#include "ragfaith/providers.hpp"
#include "ragfaith/vector_index.hpp"

namespace ragfaith {

namespace fs = std::filesystem;

namespace {

struct Overrides {
    std::string config;
    std::string cache_dir;
    std::string out;
    std::optional<std::size_t> concurrency;
    std::optional<double> threshold;
    std::optional<std::size_t> top_pages;
    std::optional<std::size_t> top_snippets;
    std::optional<std::size_t> k;
};

RunConfig resolve_config(const Overrides& o) {
    RunConfig c = o.config.empty() ? run_config_from_json(json::object())
                                   : load_run_config(o.config);
    if (!o.cache_dir.empty()) c.cache_dir = fs::absolute(o.cache_dir).lexically_normal();
    if (!o.out.empty()) c.out = fs::absolute(o.out).lexically_normal();
    if (o.concurrency) c.pipeline.concurrency = *o.concurrency;
    if (o.threshold) c.pipeline.threshold_pct = *o.threshold;
    if (o.top_pages) c.retrieval.top_pages = *o.top_pages;
    if (o.top_snippets) c.retrieval.top_snippets = *o.top_snippets;
    if (o.k) c.k = *o.k;
    validate(c);
    return c;
}

fs::path require_file(const std::string& path, const char* what) {
    if (path.empty()) throw ConfigError(std::string(what) + " path is required");
    const fs::path p = fs::absolute(path).lexically_normal();
    if (!fs::is_regular_file(p)) {
        throw ConfigError(std::string(what) + " not found: " + path);
    }
    return p;
}

/// Cache, ledger and counters shared by everything one command does.
struct Session {
    RunConfig config;
    std::shared_ptr<ResponseCache> cache;
    std::shared_ptr<CallLedger> ledger;

    explicit Session(RunConfig c) : config(std::move(c)) {
        fs::create_directories(config.out);
        fs::create_directories(config.cache_dir);
        cache = std::make_shared<ResponseCache>(config.cache_dir);
        ledger = std::make_shared<CallLedger>(config.out / "ledger.jsonl");
    }

    json envelope(const std::string& command) const {
        return {{"tool", "ragfaith"},
                {"version", std::string(kToolVersion)},
                {"command", command},
                {"config", to_json(config)}};
    }

    void write_json(const std::string& name, const json& j) const {
        write_file_atomic(config.out / name, j.dump(2) + "\n");
    }

    void write_stats(const std::string& command, json extra, std::ostream& out) const {
        json stats = {{"tool", "ragfaith"},
                      {"version", std::string(kToolVersion)},
                      {"command", command},
                      {"provider_calls", ledger->provider_calls()},
                      {"cache_replays", ledger->cache_replays()},
                      {"cache_hits", cache->hits()},
                      {"cache_misses", cache->misses()}};
        stats.update(extra);
        write_json("run_stats.json", stats);
        out << "provider calls: " << ledger->provider_calls() << ", cache hits: " << cache->hits()
            << ", cache misses: " << cache->misses() << "\n";
    }

    std::shared_ptr<EmbeddingProvider> embedder() const {
        return std::make_shared<CachingEmbeddingProvider>(make_embedding_provider(config.embedding),
                                                          cache, ledger);
    }

    Judge judge() const {
        JudgeOptions options;
        options.sampling = config.judge.sampling();
        options.retry = config.judge.retry;
        return Judge(make_llm_provider(config.judge), cache, ledger, options);
    }
};

// --- index ---------------------------------------------------------------------

struct LoadedIndex {
    std::shared_ptr<const KnowledgeBase> kb;
    std::shared_ptr<const VectorIndex> pages;
    std::shared_ptr<const VectorIndex> snippets;
};

LoadedIndex load_index(const RunConfig& c, const std::string& model_id) {
    const fs::path dir = c.index_dir;
    if (!fs::is_regular_file(dir / "manifest.json")) {
        throw ConfigError("no index in " + dir.string() + "; run `ragfaith index` first");
    }
    LoadedIndex out;
    out.kb = std::make_shared<const KnowledgeBase>(KnowledgeBase::load(dir / "kb"));
    out.pages = std::make_shared<const VectorIndex>(VectorIndex::load(dir / "pages.idx"));
    out.snippets = std::make_shared<const VectorIndex>(VectorIndex::load(dir / "snippets.idx"));
    if (!index_is_current(*out.pages, *out.kb, model_id, Granularity::page) ||
        !index_is_current(*out.snippets, *out.kb, model_id, Granularity::snippet)) {
        throw ConfigError("index in " + dir.string() + " was built with a different embedding model "
                          "or knowledge base; rerun `ragfaith index`");
    }
    return out;
}

bool index_up_to_date(const fs::path& dir, const KnowledgeBase& kb, const std::string& model_id) {
    if (!fs::is_regular_file(dir / "manifest.json")) return false;
    try {
        const json manifest = json::parse(read_file(dir / "manifest.json"));
        if (manifest.value("kb_fingerprint", "") != kb.fingerprint() ||
            manifest.value("embedding_model", "") != model_id) {
            return false;
        }
        const auto stored = KnowledgeBase::load(dir / "kb");
        if (stored.fingerprint() != kb.fingerprint()) return false;
        return index_is_current(VectorIndex::load(dir / "pages.idx"), kb, model_id,
                                Granularity::page) &&
               index_is_current(VectorIndex::load(dir / "snippets.idx"), kb, model_id,
                                Granularity::snippet);
    } catch (const std::exception&) {
        return false;
    }
}

int cmd_index(Session& s, std::ostream& out, std::ostream& err) {
    const RunConfig& c = s.config;
    if (c.corpus.empty()) throw ConfigError("config has no corpus path");
    if (!fs::exists(c.corpus)) throw ConfigError("corpus not found: " + c.corpus.string());

    IngestionResult ingested = ingest_documents(c.corpus, c.ingestion);
    for (const auto& e : ingested.errors) err << "warning: " << e << "\n";
    const KnowledgeBase& kb = ingested.kb;
    auto embedder = s.embedder();
    const std::string model_id = embedder->model_id();
    const int code = ingested.errors.empty() ? kExitOk : kExitPartial;

    if (index_up_to_date(c.index_dir, kb, model_id)) {
        out << "index " << c.index_dir.string() << " is up to date\n";
        s.write_stats("index", {{"up_to_date", true}}, out);
        return code;
    }

    IndexBuildOptions options;
    options.batch_size = c.embedding.batch_size;
    options.concurrency = c.embedding.concurrency;
    options.retry = c.embedding.retry;
    const VectorIndex pages = build_index(kb, *embedder, Granularity::page, options);
    const VectorIndex snippets = build_index(kb, *embedder, Granularity::snippet, options);

    fs::create_directories(c.index_dir);
    kb.save(c.index_dir / "kb");
    pages.save(c.index_dir / "pages.idx");
    snippets.save(c.index_dir / "snippets.idx");
    const json manifest = {{"format_version", 1},
                           {"tool", "ragfaith"},
                           {"version", std::string(kToolVersion)},
                           {"kb_fingerprint", kb.fingerprint()},
                           {"embedding_model", model_id},
                           {"dim", snippets.dim()},
                           {"counts",
                            {{"documents", kb.documents().size()},
                             {"pages", kb.pages().size()},
                             {"snippets", kb.snippets().size()}}},
                           {"files", {"kb", "pages.idx", "snippets.idx"}},
                           {"ingestion_errors", ingested.errors},
                           {"config", to_json(c)}};
    write_file_atomic(c.index_dir / "manifest.json", manifest.dump(2) + "\n");
    out << "indexed " << kb.documents().size() << " documents, " << kb.pages().size()
        << " pages, " << kb.snippets().size() << " snippets into " << c.index_dir.string()
        << "\n";
    s.write_stats("index", {{"up_to_date", false}}, out);
    return code;
}

// --- eval ----------------------------------------------------------------------

bool record_failed(const EvaluationRecord& r) {
    if (r.status.rfind("error", 0) == 0 || r.status.rfind("decompose_failed", 0) == 0) return true;
    for (const auto* claims : {&r.faithfulness, &r.factuality}) {
        if (!*claims) continue;
        for (const auto& c : **claims) {
            if (!c.failure.empty()) return true;
        }
    }
    return false;
}

int cmd_eval(Session& s, const std::string& dataset_arg, const std::string& mode_arg,
             std::optional<std::size_t> stop_after, std::ostream& out) {
    const RunConfig& c = s.config;
    const EvalMode mode = eval_mode_from_string(mode_arg);
    const fs::path dataset = require_file(dataset_arg, "dataset");
    std::vector<EvaluationRecord> records = load_dataset(dataset);

    std::unique_ptr<Retriever> retriever;
    std::string kb_fingerprint;
    if (mode != EvalMode::faithfulness) {
        auto embedder = s.embedder();
        LoadedIndex idx = load_index(c, embedder->model_id());
        kb_fingerprint = idx.kb->fingerprint();
        retriever = std::make_unique<Retriever>(idx.kb, idx.pages, idx.snippets, embedder,
                                                c.retrieval, c.embedding.retry);
    }
    Judge judge = s.judge();

    json echo = to_json(c);
    echo["mode"] = to_string(mode);
    echo["dataset"] = echo_path(c, dataset);

    RunOptions options;
    options.mode = mode;
    options.k = c.k;
    options.concurrency = c.pipeline.concurrency;
    options.evidence.headers = c.pipeline.evidence_headers;
    options.threshold_pct = c.pipeline.threshold_pct;
    options.checkpoint = c.out / "checkpoint.jsonl";
    options.fingerprint = sha256_hex(json{{"config", echo},
                                          {"dataset_sha256", sha256_hex(read_file(dataset))},
                                          {"kb", kb_fingerprint}}
                                         .dump());
    options.stop_after = stop_after;

    RunResult result = run_evaluation(std::move(records), judge, retriever.get(), options);
    if (result.interrupted) {
        out << "interrupted; " << result.records.size() << " records in dataset, rerun to resume\n";
        s.write_stats("eval", {{"interrupted", true}, {"resumed", result.resumed}}, out);
        return kExitPartial;
    }

    const EvaluationReport report = aggregate_report(result.records, c.pipeline.averaging);
    s.write_json("report.json",
                 report_to_json(report, result.records, echo, c.pipeline.threshold_pct));
    write_file_atomic(c.out / "report.csv", headline_csv(report));

    std::size_t failed = 0;
    for (const auto& r : result.records) failed += record_failed(r) ? 1 : 0;
    const auto ref = headline_pct(report.ref.headline(report.averaging));
    const auto kb = headline_pct(report.kb.headline(report.averaging));
    out << "evaluated " << result.records.size() << " records (" << result.resumed
        << " resumed); claim support ref: " << (ref ? std::to_string(*ref) : "-")
        << ", kb: " << (kb ? std::to_string(*kb) : "-") << "\n";
    if (failed > 0) out << failed << " records had failures\n";
    s.write_stats("eval", {{"interrupted", false}, {"resumed", result.resumed},
                           {"failed_records", failed}},
                  out);
    return failed > 0 ? kExitPartial : kExitOk;
}

// --- generate ------------------------------------------------------------------

int cmd_generate(Session& s, const std::string& questions_arg, std::ostream& out) {
    const RunConfig& c = s.config;
    const fs::path questions = require_file(questions_arg, "questions");
    std::vector<std::pair<std::string, std::string>> items;
    for (const auto& line : read_jsonl(questions)) {
        const json& j = line.value;
        if (!j.is_object() || !j.contains("id") || !j["id"].is_string() ||
            !j.contains("question") || !j["question"].is_string()) {
            throw ValidationError(questions.string() + ":" + std::to_string(line.line_no) +
                                  ": expected {\"id\": string, \"question\": string}");
        }
        items.emplace_back(j["id"].get<std::string>(), j["question"].get<std::string>());
    }

    auto embedder = s.embedder();
    LoadedIndex idx = load_index(c, embedder->model_id());
    Retriever retriever(idx.kb, idx.pages, idx.snippets, embedder, c.retrieval, c.embedding.retry);
    AnswerGenerator generator(make_llm_provider(c.generator), s.cache, s.ledger,
                              c.generator.sampling(), c.generator.retry);

    std::string lines;
    std::size_t failed = 0;
    for (const auto& [id, question] : items) {
        json rec = generate_record(id, question, retriever, generator);
        if (rec.contains("error")) ++failed;
        lines += rec.dump() + "\n";
    }
    write_file_atomic(c.out / "responses.jsonl", lines);
    out << "generated " << items.size() << " responses into "
        << (c.out / "responses.jsonl").string() << "\n";
    s.write_stats("generate", {{"failed_records", failed}}, out);
    return failed > 0 ? kExitPartial : kExitOk;
}

// --- dataset analyses ------------------------------------------------------------

int cmd_analyze_ift(Session& s, const std::string& dataset_arg,
                    const std::vector<std::string>& rows, std::ostream& out) {
    const fs::path dataset = require_file(dataset_arg, "dataset");
    for (const auto& key : rows) require_valid_subset_key(key);
    const auto examples = load_ift(dataset);
    Judge judge = s.judge();
    SubsetReportOptions options;
    options.concurrency = s.config.pipeline.concurrency;
    options.rows = rows;
    const auto table = subset_report(examples, judge, options);

    json report = s.envelope("analyze-ift");
    report["config"]["dataset"] = echo_path(s.config, dataset);
    report.update(subset_report_to_json(table));
    s.write_json("ift_report.json", report);
    write_file_atomic(s.config.out / "ift_report.csv", subset_report_csv(table));

    std::size_t failures = 0;
    for (const auto& row : table) failures += row.failures;
    out << "analyzed " << examples.size() << " examples in " << table.size() << " subsets\n";
    s.write_stats("analyze-ift", {{"failures", failures}}, out);
    return failures > 0 ? kExitPartial : kExitOk;
}

int cmd_filter_ift(Session& s, const std::string& dataset_arg,
                   const std::vector<std::string>& exclude, std::ostream& out) {
    const fs::path dataset = require_file(dataset_arg, "dataset");
    for (const auto& key : exclude) require_valid_subset_key(key);
    const auto lines = read_jsonl(dataset);
    std::vector<IFTExample> examples;
    for (const auto& line : lines) {
        try {
            examples.push_back(ift_example_from_json(line.value));
        } catch (const ValidationError& e) {
            throw ValidationError(dataset.string() + ":" + std::to_string(line.line_no) + ": " +
                                  e.what());
        }
    }
    const FilterResult filtered = filter_ift(examples, {exclude.begin(), exclude.end()});
    std::set<std::string> kept;
    for (const auto& e : filtered.kept) kept.insert(e.id);

    std::string kept_lines;
    for (std::size_t i = 0; i < lines.size(); ++i) {
        if (kept.contains(examples[i].id)) kept_lines += lines[i].value.dump() + "\n";
    }
    write_file_atomic(s.config.out / "ift_filtered.jsonl", kept_lines);
    json manifest = s.envelope("filter-ift");
    manifest["config"]["dataset"] = echo_path(s.config, dataset);
    manifest["empty"] = examples.empty();
    manifest.update(filtered.manifest);
    s.write_json("ift_filter_manifest.json", manifest);
    out << "kept " << filtered.kept.size() << " of " << examples.size() << " examples\n";
    s.write_stats("filter-ift", json::object(), out);
    return kExitOk;
}

int cmd_verify_fever(Session& s, const std::string& dataset_arg, bool all_votes,
                     const std::string& order, bool keep_disputed_claims, std::ostream& out,
                     std::ostream& err) {
    const fs::path dataset = require_file(dataset_arg, "dataset");
    FeverLoadOptions options;
    options.unanimous_only = !all_votes;
    options.drop_disputed_claims = !keep_disputed_claims;
    if (order == "map-then-unanimity") {
        options.order = FilterOrder::map_then_unanimity;
    } else if (order == "unanimity-then-map") {
        options.order = FilterOrder::unanimity_then_map;
    } else {
        throw ConfigError("unknown --order \"" + order +
                          "\" (expected map-then-unanimity or unanimity-then-map)");
    }
    const FeverDataset data = load_climate_fever(dataset, options);
    if (data.stats.malformed_records > 0 || data.stats.malformed_pairs > 0) {
        err << "warning: skipped " << data.stats.malformed_records << " malformed records and "
            << data.stats.malformed_pairs << " malformed pairs\n";
    }
    Judge judge = s.judge();
    const FeverVerification v = verify_pairs(data.pairs, judge, s.config.pipeline.concurrency);

    json report = s.envelope("verify-fever");
    report["config"]["dataset"] = echo_path(s.config, dataset);
    report["config"]["unanimous_only"] = options.unanimous_only;
    report["config"]["order"] = order;
    report["config"]["drop_disputed_claims"] = options.drop_disputed_claims;
    report["empty"] = data.pairs.empty();
    report.update(fever_report_to_json(data.stats, v));
    s.write_json("fever_report.json", report);
    out << "verified " << v.n << " pairs from " << data.stats.claims_kept << " claims";
    if (v.overall_acc) out << "; overall accuracy " << format_fixed(*v.overall_acc, 1) << "%";
    out << "\n";
    s.write_stats("verify-fever", {{"failures", v.failures}}, out);
    return v.failures > 0 ? kExitPartial : kExitOk;
}

/// Predictions keyed by id: a report.json from `eval`, or JSON lines carrying
/// either "claim_support" or "binary_faithful". nullopt marks records without
/// a usable prediction.
std::map<std::string, std::optional<bool>> load_predictions(const fs::path& path,
                                                            double threshold) {
    std::map<std::string, std::optional<bool>> out;
    auto take = [&](const json& j, const std::string& where) {
        if (!j.is_object() || !j.contains("id") || !j["id"].is_string()) {
            throw ValidationError(where + ": prediction needs a string \"id\"");
        }
        std::optional<bool> pred;
        for (const char* key : {"claim_support", "claim_support_ref"}) {
            if (j.contains(key) && j[key].is_number()) {
                pred = binary_faithful(j[key].get<double>(), threshold);
                break;
            }
        }
        if (!pred && j.contains("binary_faithful") && j["binary_faithful"].is_boolean()) {
            pred = j["binary_faithful"].get<bool>();
        }
        if (!out.emplace(j["id"].get<std::string>(), pred).second) {
            throw ValidationError(where + ": duplicate id " + j["id"].get<std::string>());
        }
    };
    const std::string text = read_file(path);
    const json whole = json::parse(text, nullptr, false);
    if (!whole.is_discarded() && whole.is_object() && whole.contains("records")) {
        for (const auto& row : whole["records"]) take(row, path.string());
        return out;
    }
    for (const auto& line : read_jsonl(path)) {
        take(line.value, path.string() + ":" + std::to_string(line.line_no));
    }
    return out;
}

int cmd_agreement(Session& s, const std::string& preds_arg, const std::string& gold_arg,
                  std::ostream& out) {
    const fs::path preds_path = require_file(preds_arg, "predictions");
    const fs::path gold_path = require_file(gold_arg, "gold labels");
    const double threshold = s.config.pipeline.threshold_pct;
    const auto preds = load_predictions(preds_path, threshold);

    std::vector<bool> predicted;
    std::vector<HumanLabel> gold;
    std::size_t skipped_labels = 0;
    std::size_t missing = 0;
    for (const auto& line : read_jsonl(gold_path)) {
        const json& j = line.value;
        if (!j.is_object() || !j.contains("id") || !j["id"].is_string() ||
            !j.contains("label") || !j["label"].is_string()) {
            throw ValidationError(gold_path.string() + ":" + std::to_string(line.line_no) +
                                  ": expected {\"id\": string, \"label\": string}");
        }
        const auto label = human_label_from_string(j["label"].get<std::string>());
        if (!label) {
            ++skipped_labels;
            continue;
        }
        const auto it = preds.find(j["id"].get<std::string>());
        if (it == preds.end() || !it->second) {
            ++missing;
            continue;
        }
        predicted.push_back(*it->second);
        gold.push_back(*label);
    }

    json report = s.envelope("agreement");
    report["config"]["predictions"] = echo_path(s.config, preds_path);
    report["config"]["gold"] = echo_path(s.config, gold_path);
    auto opt = [](const std::optional<double>& v) { return v ? json(*v) : json(nullptr); };
    report["empty"] = predicted.empty();
    report["threshold"] = threshold;
    report["skipped_labels"] = skipped_labels;
    report["missing_predictions"] = missing;
    if (predicted.empty()) {
        report["n"] = 0;
        report["overall_acc"] = nullptr;
        report["acc_faithful"] = nullptr;
        report["acc_not_faithful"] = nullptr;
        out << "no labelled records to compare\n";
    } else {
        const AgreementResult a = agreement(predicted, gold);
        report["n"] = a.n;
        report["n_faithful"] = a.n_faithful;
        report["n_not_faithful"] = a.n_not_faithful;
        report["overall_acc"] = a.overall_acc;
        report["acc_faithful"] = opt(a.acc_faithful);
        report["acc_not_faithful"] = opt(a.acc_not_faithful);
        out << "agreement over " << a.n << " records: " << format_fixed(a.overall_acc, 1) << "%\n";
    }
    s.write_json("agreement_report.json", report);
    s.write_stats("agreement", json::object(), out);
    return missing > 0 ? kExitPartial : kExitOk;
}

std::vector<std::pair<std::size_t, std::size_t>> spans_from_json(const json& arr) {
    if (!arr.is_array()) throw ValidationError("\"spans\" must be an array");
    std::vector<std::pair<std::size_t, std::size_t>> spans;
    for (const auto& sp : arr) {
        if (sp.is_array() && sp.size() == 2 && sp[0].is_number_integer() &&
            sp[1].is_number_integer()) {
            if (sp[0].get<long long>() < 0 || sp[1].get<long long>() < 0) {
                throw ValidationError("span offsets must be non-negative");
            }
            spans.emplace_back(sp[0].get<std::size_t>(), sp[1].get<std::size_t>());
        } else if (sp.is_object() && sp.contains("start") && sp.contains("end") &&
                   sp["start"].is_number_unsigned() && sp["end"].is_number_unsigned()) {
            spans.emplace_back(sp["start"].get<std::size_t>(), sp["end"].get<std::size_t>());
        } else {
            throw ValidationError("span must be [start, end] or {\"start\", \"end\"}");
        }
    }
    return spans;
}

int cmd_span_rate(Session& s, const std::string& dataset_arg, std::ostream& out) {
    const fs::path dataset = require_file(dataset_arg, "annotations");
    std::vector<SpanAnnotation> annotations;
    for (const auto& line : read_jsonl(dataset)) {
        const json& j = line.value;
        try {
            if (!j.is_object() || !j.contains("id") || !j["id"].is_string() ||
                !j.contains("spans")) {
                throw ValidationError("expected {\"id\": string, \"spans\": [...]}");
            }
            SpanAnnotation a{j["id"].get<std::string>(), spans_from_json(j["spans"])};
            std::optional<std::size_t> length;
            if (j.contains("response") && j["response"].is_string()) {
                length = j["response"].get<std::string>().size();
            } else if (j.contains("response_length") && j["response_length"].is_number_unsigned()) {
                length = j["response_length"].get<std::size_t>();
            }
            validate_spans(a, length.value_or(static_cast<std::size_t>(-1)));
            annotations.push_back(std::move(a));
        } catch (const ValidationError& e) {
            throw ValidationError(dataset.string() + ":" + std::to_string(line.line_no) + ": " +
                                  e.what());
        }
    }
    json report = s.envelope("span-rate");
    report["config"]["dataset"] = echo_path(s.config, dataset);
    report["empty"] = annotations.empty();
    report["n"] = annotations.size();
    std::size_t clean = 0;
    for (const auto& a : annotations) clean += a.spans.empty() ? 1 : 0;
    report["hallucination_free"] = clean;
    if (annotations.empty()) {
        report["hallucination_free_pct"] = nullptr;
        out << "no annotations\n";
    } else {
        const double rate = hallucination_free_rate(annotations);
        report["hallucination_free_pct"] = rate;
        out << clean << " of " << annotations.size() << " responses have no detected span ("
            << format_fixed(rate, 1) << "%)\n";
    }
    s.write_json("span_rate.json", report);
    s.write_stats("span-rate", json::object(), out);
    return kExitOk;
}

}  // namespace

json generate_record(const std::string& id, const std::string& question,
                     const Retriever& retriever, AnswerGenerator& generator) {
    const auto results = retriever.retrieve(question);
    const KnowledgeBase& kb = retriever.kb();
    std::vector<RagPassage> passages;
    json passages_json = json::array();
    for (const auto& r : results) {
        const Snippet& sn = kb.snippets()[r.snippet_index];
        const Document* doc = kb.find_document(sn.doc_id);
        RagPassage p{doc ? doc->title : sn.doc_id, doc ? doc->year : std::nullopt, sn.text};
        passages_json.push_back({{"title", p.title},
                                 {"year", p.year ? json(*p.year) : json(nullptr)},
                                 {"content", p.content},
                                 {"snippet_id", r.snippet.str()}});
        passages.push_back(std::move(p));
    }
    json rec = {{"id", id},
                {"question", question},
                {"response", ""},
                {"passages", passages_json},
                {"evidence_source", "rag_passages"}};
    if (passages.empty()) {
        rec["retrieval_empty"] = true;
        return rec;
    }
    try {
        rec["response"] = generator.answer(question, passages);
    } catch (const JudgeFailure& e) {
        rec["error"] = e.what();
    }
    return rec;
}

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"Faithfulness and factuality evaluation of RAG answers", "ragfaith"};
    app.require_subcommand(1);
    app.set_version_flag("--version", std::string(kToolVersion));

    Overrides o;
    app.add_option("--config", o.config, "JSON run configuration");
    app.add_option("--cache-dir", o.cache_dir, "Response cache directory");
    app.add_option("--out", o.out, "Output directory");
    app.add_option("--concurrency", o.concurrency, "Parallel judge calls")
        ->check(CLI::PositiveNumber);
    app.add_option("--threshold", o.threshold, "Binary faithfulness threshold in percent")
        ->check(CLI::Range(0.0, 100.0));
    app.add_option("--top-pages", o.top_pages, "Pages kept by the first retrieval stage")
        ->check(CLI::PositiveNumber);
    app.add_option("--top-snippets", o.top_snippets, "Snippets kept by the second stage")
        ->check(CLI::PositiveNumber);
    app.add_option("--k", o.k, "Evidence snippets per claim")->check(CLI::PositiveNumber);

    std::string dataset;
    std::string mode = "faithfulness";
    std::optional<std::size_t> stop_after;
    std::vector<std::string> rows;
    std::vector<std::string> exclude;
    bool all_votes = false;
    bool keep_disputed = false;
    std::string order = "map-then-unanimity";
    std::string preds;
    std::string gold;

    auto* index = app.add_subcommand("index", "Ingest the corpus and build page and snippet indices");
    auto* eval = app.add_subcommand("eval", "Score a dataset of responses");
    eval->add_option("--dataset", dataset, "Records to evaluate (JSON lines)")->required();
    eval->add_option("--mode", mode, "faithfulness, factuality or both")
        ->check(CLI::IsMember({"faithfulness", "factuality", "both"}));
    eval->add_option("--stop-after", stop_after, "Stop after N newly evaluated records")
        ->group("");
    auto* generate = app.add_subcommand("generate", "Answer questions from retrieved passages");
    generate->add_option("--dataset", dataset, "Questions (JSON lines of id, question)")
        ->required();
    auto* analyze = app.add_subcommand("analyze-ift", "Claim support per IFT subset");
    analyze->add_option("--dataset", dataset, "IFT examples (JSON lines)")->required();
    analyze->add_option("--rows", rows, "Subset keys to report");
    auto* filter = app.add_subcommand("filter-ift", "Drop IFT subsets and write a manifest");
    filter->add_option("--dataset", dataset, "IFT examples (JSON lines)")->required();
    filter->add_option("--exclude", exclude, "Subset keys to drop")->required();
    auto* fever = app.add_subcommand("verify-fever", "Verify Climate-FEVER claim-evidence pairs");
    fever->add_option("--dataset", dataset, "Climate-FEVER file")->required();
    fever->add_flag("--all-votes", all_votes, "Keep non-unanimous pairs and use the majority");
    fever->add_option("--order", order, "map-then-unanimity or unanimity-then-map");
    fever->add_flag("--keep-disputed-claims", keep_disputed,
                    "Keep pairs of claims labelled DISPUTED");
    auto* agree = app.add_subcommand("agreement", "Agreement of binary labels with human labels");
    agree->add_option("--preds", preds, "report.json or JSON lines of predictions")->required();
    agree->add_option("--gold", gold, "JSON lines of {id, label}")->required();
    auto* span = app.add_subcommand("span-rate", "Share of responses without hallucinated spans");
    span->add_option("--dataset", dataset, "JSON lines of {id, spans}")->required();

    for (auto* sub : {index, eval, generate, analyze, filter, fever, agree, span}) {
        sub->fallthrough();
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? kExitOk : kExitFatal;
    }

    try {
        Session s(resolve_config(o));
        if (*index) return cmd_index(s, out, err);
        if (*eval) return cmd_eval(s, dataset, mode, stop_after, out);
        if (*generate) return cmd_generate(s, dataset, out);
        if (*analyze) return cmd_analyze_ift(s, dataset, rows, out);
        if (*filter) return cmd_filter_ift(s, dataset, exclude, out);
        if (*fever) return cmd_verify_fever(s, dataset, all_votes, order, keep_disputed, out, err);
        if (*agree) return cmd_agreement(s, preds, gold, out);
        if (*span) return cmd_span_rate(s, dataset, out);
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return kExitFatal;
    }
    return kExitFatal;
}

}  // namespace ragfaith
