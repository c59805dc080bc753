#include "ragfaith/datasets.hpp"

#include <algorithm>
#include <map>

#include "ragfaith/error.hpp"
#include "ragfaith/pipeline.hpp"
#include "ragfaith/worker_pool.hpp"

namespace ragfaith {

namespace fs = std::filesystem;

std::string to_string(IftSource s) {
    switch (s) {
        case IftSource::senior_expert: return "senior_expert";
        case IftSource::expert: return "expert";
        case IftSource::non_expert: return "non_expert";
    }
    return "non_expert";
}

std::string to_string(IftCategory c) {
    return c == IftCategory::open_ended ? "open_ended" : "closed_ended";
}

std::string subset_key(const IFTExample& e) {
    return to_string(e.source) + "/" + to_string(e.category) + (e.grounded ? "_grounded" : "");
}

const std::vector<std::string>& valid_subset_keys() {
    static const std::vector<std::string> keys = [] {
        std::vector<std::string> out;
        for (auto s : {IftSource::senior_expert, IftSource::expert, IftSource::non_expert}) {
            for (const char* sub :
                 {"open_ended", "closed_ended", "open_ended_grounded", "closed_ended_grounded"}) {
                out.push_back(to_string(s) + "/" + sub);
            }
        }
        return out;
    }();
    return keys;
}

void require_valid_subset_key(const std::string& key) {
    const auto& keys = valid_subset_keys();
    if (std::find(keys.begin(), keys.end(), key) != keys.end()) {
        return;
    }
    std::string msg = "unknown subset key \"" + key + "\"; valid keys:";
    for (const auto& k : keys) msg += " " + k;
    throw ValidationError(msg);
}

void validate_example(const IFTExample& e) {
    if (e.id.empty()) throw ValidationError("example without id");
    if (e.grounded && e.category == IftCategory::open_ended && e.context_paragraphs.empty()) {
        throw ValidationError("example " + e.id +
                              ": grounded open-ended example has no context paragraphs");
    }
}

namespace {

std::vector<std::string> string_list(const json& j, const char* key) {
    if (!j.contains(key) || j[key].is_null()) return {};
    if (!j[key].is_array()) throw ValidationError(std::string("\"") + key + "\" must be an array");
    std::vector<std::string> out;
    for (const auto& v : j[key]) {
        if (!v.is_string()) throw ValidationError(std::string("\"") + key + "\" entries must be strings");
        out.push_back(v.get<std::string>());
    }
    return out;
}

std::string need_string(const json& j, const char* key) {
    if (!j.contains(key) || !j[key].is_string()) {
        throw ValidationError(std::string("field \"") + key + "\" must be a string");
    }
    return j[key].get<std::string>();
}

}  // namespace

IFTExample ift_example_from_json(const json& j) {
    if (!j.is_object()) throw ValidationError("example must be a JSON object");
    IFTExample e;
    e.id = need_string(j, "id");
    const std::string source = need_string(j, "source");
    if (source == "senior_expert") e.source = IftSource::senior_expert;
    else if (source == "expert") e.source = IftSource::expert;
    else if (source == "non_expert") e.source = IftSource::non_expert;
    else throw ValidationError("unknown source \"" + source + "\" (senior_expert, expert, non_expert)");
    const std::string category = need_string(j, "category");
    if (category == "open_ended") e.category = IftCategory::open_ended;
    else if (category == "closed_ended") e.category = IftCategory::closed_ended;
    else throw ValidationError("unknown category \"" + category + "\" (open_ended, closed_ended)");
    if (!j.contains("grounded") || !j["grounded"].is_boolean()) {
        throw ValidationError("field \"grounded\" must be a boolean");
    }
    e.grounded = j["grounded"].get<bool>();
    e.prompt = need_string(j, "prompt");
    e.response = need_string(j, "response");
    e.context_paragraphs = string_list(j, "context_paragraphs");
    e.distractor_paragraphs = string_list(j, "distractor_paragraphs");
    validate_example(e);
    return e;
}

std::vector<IFTExample> load_ift(const fs::path& path) {
    std::vector<IFTExample> out;
    for (const auto& line : read_jsonl(path)) {
        try {
            out.push_back(ift_example_from_json(line.value));
        } catch (const ValidationError& e) {
            throw ValidationError(path.string() + ":" + std::to_string(line.line_no) + ": " +
                                  e.what());
        }
    }
    return out;
}

std::optional<std::string> context_for_example(const IFTExample& e) {
    validate_example(e);
    if (e.category == IftCategory::closed_ended) {
        return e.prompt;
    }
    if (!e.grounded) {
        return std::nullopt;
    }
    std::string out;
    for (std::size_t i = 0; i < e.context_paragraphs.size(); ++i) {
        if (i > 0) out += "\n\n";
        out += e.context_paragraphs[i];
    }
    return out;
}

std::vector<SubsetRow> subset_report(const std::vector<IFTExample>& examples, Judge& judge,
                                     const SubsetReportOptions& options) {
    std::vector<std::string> row_keys = options.rows;
    for (const auto& k : row_keys) require_valid_subset_key(k);
    if (row_keys.empty()) {
        std::set<std::string> present;
        for (const auto& e : examples) present.insert(subset_key(e));
        for (const auto& k : valid_subset_keys()) {
            if (present.count(k)) row_keys.push_back(k);
        }
    }

    std::vector<EvaluationRecord> records;
    records.reserve(examples.size());
    for (const auto& e : examples) {
        EvaluationRecord r;
        r.id = e.id;
        r.question = e.prompt;
        r.prompt = e.prompt;
        r.response = e.response;
        const auto ctx = context_for_example(e);
        if (e.category == IftCategory::closed_ended) {
            r.evidence_source = EvidenceSource::full_prompt;
        } else {
            r.evidence_source = EvidenceSource::provided_paragraphs;
            if (ctx) r.paragraphs = e.context_paragraphs;
        }
        records.push_back(std::move(r));
    }
    RunOptions run;
    run.mode = EvalMode::faithfulness;
    run.concurrency = options.concurrency;
    auto result = run_evaluation(std::move(records), judge, nullptr, run);

    std::map<std::string, std::vector<EvaluationRecord>> grouped;
    for (std::size_t i = 0; i < examples.size(); ++i) {
        grouped[subset_key(examples[i])].push_back(std::move(result.records[i]));
    }
    std::vector<SubsetRow> rows;
    for (const auto& key : row_keys) {
        SubsetRow row;
        row.key = key;
        auto it = grouped.find(key);
        if (it != grouped.end()) {
            const auto report = aggregate_report(it->second);
            row.size = it->second.size();
            row.avg_claims = report.avg_claims;
            row.claim_support_pct = report.ref.macro;
            row.claim_support_micro_pct = report.ref.micro;
            row.failures = report.decompose_failures + report.ref.claims_failed;
        }
        rows.push_back(std::move(row));
    }
    return rows;
}

namespace {
json opt(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }
}  // namespace

json subset_report_to_json(const std::vector<SubsetRow>& rows) {
    json arr = json::array();
    std::size_t total = 0;
    for (const auto& r : rows) {
        const auto slash = r.key.find('/');
        const auto avg = headline_avg_claims(r.avg_claims);
        const auto pct = headline_pct(r.claim_support_pct);
        arr.push_back({{"key", r.key},
                       {"source", r.key.substr(0, slash)},
                       {"subset", r.key.substr(slash + 1)},
                       {"size", r.size},
                       {"avg_claims", opt(r.avg_claims)},
                       {"claim_support_pct", opt(r.claim_support_pct)},
                       {"claim_support_micro_pct", opt(r.claim_support_micro_pct)},
                       {"headline_avg_claims", avg ? json(*avg) : json(nullptr)},
                       {"headline_claim_support_pct", pct ? json(*pct) : json(nullptr)},
                       {"failures", r.failures}});
        total += r.size;
    }
    return {{"rows", arr}, {"total", total}, {"empty", total == 0}};
}

std::string subset_report_csv(const std::vector<SubsetRow>& rows) {
    std::string out = "source,subset,size,avg_claims,claim_support_ref_pct\n";
    for (const auto& r : rows) {
        const auto slash = r.key.find('/');
        const auto avg = headline_avg_claims(r.avg_claims);
        const auto pct = headline_pct(r.claim_support_pct);
        out += r.key.substr(0, slash) + "," + r.key.substr(slash + 1) + "," +
               std::to_string(r.size) + "," + (avg ? format_fixed(*avg, 1) : "-") + "," +
               (pct ? std::to_string(*pct) : "-") + "\n";
    }
    return out;
}

FilterResult filter_ift(const std::vector<IFTExample>& examples,
                        const std::set<std::string>& exclusions) {
    for (const auto& k : exclusions) require_valid_subset_key(k);
    FilterResult result;
    std::map<std::string, std::size_t> before;
    std::map<std::string, std::size_t> after;
    json ids = json::array();
    for (const auto& e : examples) {
        const std::string key = subset_key(e);
        ++before[key];
        if (exclusions.count(key)) continue;
        ++after[key];
        ids.push_back(e.id);
        result.kept.push_back(e);
    }
    json counts_before = json::object();
    json counts_after = json::object();
    for (const auto& k : valid_subset_keys()) {
        if (before.count(k)) {
            counts_before[k] = before[k];
            counts_after[k] = after.count(k) ? after[k] : 0;
        }
    }
    result.manifest = {{"excluded", std::vector<std::string>(exclusions.begin(), exclusions.end())},
                       {"counts_before", counts_before},
                       {"counts_after", counts_after},
                       {"total_before", examples.size()},
                       {"total_after", result.kept.size()},
                       {"ids", ids}};
    return result;
}

// --- Climate-FEVER -----------------------------------------------------------

std::string to_string(FeverLabel l) {
    switch (l) {
        case FeverLabel::supported: return "supported";
        case FeverLabel::refuted: return "refuted";
        case FeverLabel::not_enough_info: return "not_enough_info";
        case FeverLabel::disputed: return "disputed";
    }
    return "disputed";
}

std::string to_string(BinaryLabel l) {
    return l == BinaryLabel::supported ? "supported" : "not_supported";
}

std::optional<FeverLabel> fever_label_from_json(const json& v) {
    if (v.is_number_integer()) {
        switch (v.get<int>()) {
            case 0: return FeverLabel::supported;
            case 1: return FeverLabel::refuted;
            case 2: return FeverLabel::not_enough_info;
            case 3: return FeverLabel::disputed;
            default: return std::nullopt;
        }
    }
    if (!v.is_string()) return std::nullopt;
    const std::string s = to_lower_ascii(trim(v.get<std::string>()));
    if (s == "supports" || s == "supported") return FeverLabel::supported;
    if (s == "refutes" || s == "refuted") return FeverLabel::refuted;
    if (s == "not_enough_info" || s == "not enough info" || s == "nei") {
        return FeverLabel::not_enough_info;
    }
    if (s == "disputed") return FeverLabel::disputed;
    return std::nullopt;
}

namespace {

BinaryLabel to_binary(FeverLabel l) {
    return l == FeverLabel::supported ? BinaryLabel::supported : BinaryLabel::not_supported;
}

PairDecision from_binary(BinaryLabel b) {
    return b == BinaryLabel::supported ? PairDecision::supported : PairDecision::not_supported;
}

}  // namespace

PairDecision decide_pair(const std::vector<FeverLabel>& labels, bool unanimous_only,
                         FilterOrder order) {
    if (labels.empty() ||
        std::find(labels.begin(), labels.end(), FeverLabel::disputed) != labels.end()) {
        return PairDecision::drop_disputed;
    }
    if (unanimous_only) {
        if (order == FilterOrder::unanimity_then_map) {
            const bool same = std::all_of(labels.begin(), labels.end(),
                                          [&](FeverLabel l) { return l == labels.front(); });
            return same ? from_binary(to_binary(labels.front())) : PairDecision::drop_disagreement;
        }
        const BinaryLabel first = to_binary(labels.front());
        const bool same = std::all_of(labels.begin(), labels.end(),
                                      [&](FeverLabel l) { return to_binary(l) == first; });
        return same ? from_binary(first) : PairDecision::drop_disagreement;
    }
    const auto supported = std::count(labels.begin(), labels.end(), FeverLabel::supported);
    const auto other = static_cast<long>(labels.size()) - supported;
    if (supported == other) return PairDecision::drop_disagreement;
    return supported > other ? PairDecision::supported : PairDecision::not_supported;
}

FeverDataset load_climate_fever(const fs::path& path, const FeverLoadOptions& options) {
    FeverDataset out;
    std::vector<json> records;
    const std::string head = trim(read_file(path).substr(0, 4096));
    if (!head.empty() && head.front() == '[') {
        try {
            for (auto& r : json::parse(read_file(path))) records.push_back(std::move(r));
        } catch (const json::parse_error& e) {
            throw ValidationError(path.string() + ": malformed JSON array: " + e.what());
        }
    } else {
        for (auto& line : read_jsonl_lenient(path, [&](std::size_t, const std::string&) {
                 ++out.stats.malformed_records;
             })) {
            records.push_back(std::move(line.value));
        }
    }

    auto& st = out.stats;
    for (const auto& rec : records) {
        if (!rec.is_object() || !rec.contains("claim") || !rec["claim"].is_string() ||
            !rec.contains("evidences") || !rec["evidences"].is_array()) {
            ++st.malformed_records;
            continue;
        }
        ++st.claims_in;
        const std::string claim_id =
            rec.contains("claim_id") ? (rec["claim_id"].is_string() ? rec["claim_id"].get<std::string>()
                                                                    : rec["claim_id"].dump())
                                     : std::to_string(st.claims_in - 1);
        const bool claim_disputed =
            options.drop_disputed_claims && rec.contains("claim_label") &&
            fever_label_from_json(rec["claim_label"]) == FeverLabel::disputed;
        bool kept_any = false;
        for (const auto& ev : rec["evidences"]) {
            ++st.pairs_in;
            if (!ev.is_object() || !ev.contains("evidence") || !ev["evidence"].is_string() ||
                !ev.contains("votes") || !ev["votes"].is_array()) {
                ++st.malformed_pairs;
                continue;
            }
            std::vector<FeverLabel> labels;
            bool bad_vote = false;
            for (const auto& vote : ev["votes"]) {
                if (vote.is_null()) continue;  // unused annotator slot
                auto l = fever_label_from_json(vote);
                if (!l) {
                    bad_vote = true;
                    break;
                }
                labels.push_back(*l);
            }
            if (bad_vote || labels.size() < 2) {
                ++st.malformed_pairs;
                continue;
            }
            const PairDecision d =
                claim_disputed ? PairDecision::drop_disputed
                               : decide_pair(labels, options.unanimous_only, options.order);
            if (d == PairDecision::drop_disputed) {
                ++st.dropped_disputed;
                continue;
            }
            if (d == PairDecision::drop_disagreement) {
                ++st.dropped_disagreement;
                continue;
            }
            FeverPair p;
            p.claim_id = claim_id;
            p.claim = rec["claim"].get<std::string>();
            p.evidence_id = ev.contains("evidence_id") && ev["evidence_id"].is_string()
                                ? ev["evidence_id"].get<std::string>()
                                : claim_id + "-" + std::to_string(st.pairs_in);
            const std::string article =
                ev.contains("article") && ev["article"].is_string() ? ev["article"].get<std::string>() : "";
            p.evidence = article.empty() ? ev["evidence"].get<std::string>()
                                         : "[" + article + "] " + ev["evidence"].get<std::string>();
            p.annotator_labels = std::move(labels);
            p.gold = d == PairDecision::supported ? BinaryLabel::supported : BinaryLabel::not_supported;
            out.pairs.push_back(std::move(p));
            kept_any = true;
        }
        if (kept_any) ++st.claims_kept;
    }
    st.pairs_kept = out.pairs.size();
    return out;
}

FeverVerification verify_pairs(const std::vector<FeverPair>& pairs, Judge& judge,
                               std::size_t concurrency) {
    FeverVerification v;
    v.predictions.resize(pairs.size());
    parallel_for(pairs.size(), concurrency, [&](std::size_t i) {
        const auto outcome = judge.verify(pairs[i].evidence, {pairs[i].claim});
        if (outcome.at(0).ok()) {
            v.predictions[i] = outcome[0].verdict->verdict == 1 ? BinaryLabel::supported
                                                                : BinaryLabel::not_supported;
        }
    });
    std::size_t correct = 0;
    for (std::size_t i = 0; i < pairs.size(); ++i) {
        if (!v.predictions[i]) {
            ++v.failures;
            continue;
        }
        ++v.n;
        const bool gold_s = pairs[i].gold == BinaryLabel::supported;
        const bool pred_s = *v.predictions[i] == BinaryLabel::supported;
        if (gold_s && pred_s) ++v.confusion.supported_as_supported;
        if (gold_s && !pred_s) ++v.confusion.supported_as_not;
        if (!gold_s && pred_s) ++v.confusion.not_as_supported;
        if (!gold_s && !pred_s) ++v.confusion.not_as_not;
        correct += gold_s == pred_s;
    }
    auto pct = [](std::size_t a, std::size_t b) -> std::optional<double> {
        if (b == 0) return std::nullopt;
        return 100.0 * static_cast<double>(a) / static_cast<double>(b);
    };
    const auto& c = v.confusion;
    v.overall_acc = pct(correct, v.n);
    v.acc_supported = pct(c.supported_as_supported, c.supported_as_supported + c.supported_as_not);
    v.acc_not_supported = pct(c.not_as_not, c.not_as_not + c.not_as_supported);
    return v;
}

json fever_report_to_json(const FeverLoadStats& s, const FeverVerification& v) {
    const auto& c = v.confusion;
    return {{"filter",
             {{"claims_in", s.claims_in},
              {"pairs_in", s.pairs_in},
              {"claims_kept", s.claims_kept},
              {"pairs_kept", s.pairs_kept},
              {"dropped_disputed", s.dropped_disputed},
              {"dropped_disagreement", s.dropped_disagreement},
              {"malformed_pairs", s.malformed_pairs},
              {"malformed_records", s.malformed_records}}},
            {"verification",
             {{"n", v.n},
              {"failures", v.failures},
              {"overall_acc", opt(v.overall_acc)},
              {"acc_supported", opt(v.acc_supported)},
              {"acc_not_supported", opt(v.acc_not_supported)},
              {"confusion",
               {{"gold_supported_pred_supported", c.supported_as_supported},
                {"gold_supported_pred_not_supported", c.supported_as_not},
                {"gold_not_supported_pred_supported", c.not_as_supported},
                {"gold_not_supported_pred_not_supported", c.not_as_not}}}}},
            {"empty", v.n == 0}};
}

}  // namespace ragfaith
