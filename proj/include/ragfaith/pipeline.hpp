#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "ragfaith/judge.hpp"
#include "ragfaith/prompts.hpp"
#include "ragfaith/retrieval.hpp"
#include "ragfaith/util.hpp"

namespace ragfaith {

/// Where a record's faithfulness evidence comes from.
enum class EvidenceSource { rag_passages, full_prompt, provided_paragraphs };

std::string to_string(EvidenceSource s);
EvidenceSource evidence_source_from_string(const std::string& s);

struct ScoredClaim {
    std::string claim;
    std::optional<int> verdict;
    std::string reason;
    /// Set when the judge gave up on this claim.
    std::string failure;
    /// Snippet ids the verdict was based on (factuality only).
    std::vector<std::string> evidence_ids;
};

struct EvaluationRecord {
    std::string id;
    std::string question;
    std::string response;
    std::vector<RagPassage> passages;
    EvidenceSource evidence_source = EvidenceSource::rag_passages;
    /// Full prompt for closed-ended data; the question stands in when empty.
    std::string prompt;
    std::vector<std::string> paragraphs;

    std::optional<ClaimSet> claims;
    /// "" when fine, else "empty_response", "decompose_failed: ..." or "error: ...".
    std::string status;
    std::optional<std::vector<ScoredClaim>> faithfulness;
    std::optional<std::vector<ScoredClaim>> factuality;
};

struct EvidenceOptions {
    /// Prefix each passage with a `"title", year` line.
    bool headers = true;
};

/// Concatenated reference evidence for the record's evidence source, or
/// nullopt when there is none (the no-RAG condition).
std::optional<std::string> reference_context(const EvaluationRecord& record,
                                             const EvidenceOptions& options = {});

/// Decomposes the response once; later calls reuse the stored claims.
/// Returns false when no claims are available (empty response or failure).
bool ensure_claims(EvaluationRecord& record, Judge& judge);

void evaluate_faithfulness(EvaluationRecord& record, Judge& judge,
                           const EvidenceOptions& options = {});

/// Evidence for each claim is its top-`k` retrieved snippets; a claim with no
/// retrieved evidence gets verdict 0 and reason "no evidence retrieved".
void evaluate_factuality(EvaluationRecord& record, Judge& judge, const Retriever& retriever,
                         std::size_t k = 5, const EvidenceOptions& options = {});

inline constexpr const char* kNoEvidenceReason = "no evidence retrieved";

/// Claim support over the claims that received a verdict; nullopt when none did.
std::optional<double> record_support(const std::vector<ScoredClaim>& claims);

enum class Averaging { macro, micro };
std::string to_string(Averaging a);
Averaging averaging_from_string(const std::string& s);

struct SupportSummary {
    /// Mean of per-record support percentages.
    std::optional<double> macro;
    /// Supported claims over all verified claims, pooled.
    std::optional<double> micro;
    std::size_t records_scored = 0;
    std::size_t claims_verified = 0;
    std::size_t claims_supported = 0;
    /// Claims without a verdict, excluded from both percentages.
    std::size_t claims_failed = 0;
    /// Records with zero claims, excluded from the averages.
    std::size_t vacuous = 0;
    std::size_t not_applicable = 0;

    std::optional<double> headline(Averaging a) const { return a == Averaging::macro ? macro : micro; }
};

struct EvaluationReport {
    std::size_t n_records = 0;
    std::size_t n_decomposed = 0;
    std::optional<double> avg_claims;
    SupportSummary ref;
    SupportSummary kb;
    std::size_t empty_responses = 0;
    std::size_t decompose_failures = 0;
    Averaging averaging = Averaging::macro;

    bool empty() const noexcept { return n_decomposed == 0; }
};

EvaluationReport aggregate_report(const std::vector<EvaluationRecord>& records,
                                  Averaging averaging = Averaging::macro);

/// Headline rounding: integers for percentages, one decimal for claim counts.
std::optional<long> headline_pct(const std::optional<double>& pct);
std::optional<double> headline_avg_claims(const std::optional<double>& avg);

// --- record I/O ---------------------------------------------------------------

/// Parses one dataset line: {id, question, response, passages?, evidence_source?,
/// prompt?, paragraphs?}. Throws ValidationError on schema violations.
EvaluationRecord record_from_input_json(const json& j);

/// Reads a dataset file; schema errors name the offending line.
std::vector<EvaluationRecord> load_dataset(const std::filesystem::path& path);

/// Full record including results; the inverse of `record_from_json`.
json record_to_json(const EvaluationRecord& record, double threshold_pct = 50.0);
EvaluationRecord record_from_json(const json& j);

json report_to_json(const EvaluationReport& report, const std::vector<EvaluationRecord>& records,
                    const json& config_echo, double threshold_pct);
std::string headline_csv(const EvaluationReport& report);

// --- batch runner -------------------------------------------------------------

enum class EvalMode { faithfulness, factuality, both };
std::string to_string(EvalMode m);
EvalMode eval_mode_from_string(const std::string& s);

struct RunOptions {
    EvalMode mode = EvalMode::faithfulness;
    std::size_t k = 5;
    std::size_t concurrency = 4;
    EvidenceOptions evidence;
    double threshold_pct = 50.0;
    /// Completed records are appended here; an existing file of the same run is resumed.
    std::filesystem::path checkpoint;
    /// Identifies the run; a checkpoint with a different fingerprint is discarded.
    std::string fingerprint;
    /// Stop after this many newly evaluated records (simulates an interrupted run).
    std::optional<std::size_t> stop_after;
};

struct RunResult {
    std::vector<EvaluationRecord> records;  // input order
    std::size_t resumed = 0;
    bool interrupted = false;
};

/// Evaluates every record on a bounded worker pool. `retriever` is required
/// for factuality modes.
RunResult run_evaluation(std::vector<EvaluationRecord> records, Judge& judge,
                         const Retriever* retriever, const RunOptions& options);

}  // namespace ragfaith
