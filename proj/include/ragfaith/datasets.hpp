#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "ragfaith/judge.hpp"
#include "ragfaith/util.hpp"

namespace ragfaith {

// --- instruction fine-tuning subsets -----------------------------------------

enum class IftSource { senior_expert, expert, non_expert };
enum class IftCategory { open_ended, closed_ended };

std::string to_string(IftSource s);
std::string to_string(IftCategory c);

struct IFTExample {
    std::string id;
    IftSource source = IftSource::non_expert;
    IftCategory category = IftCategory::open_ended;
    bool grounded = false;
    std::string prompt;
    std::string response;
    std::vector<std::string> context_paragraphs;
    std::vector<std::string> distractor_paragraphs;
};

/// "<source>/<category>[_grounded]", e.g. "non_expert/open_ended_grounded".
std::string subset_key(const IFTExample& example);

/// All twelve keys in table order (senior expert first, ungrounded before grounded).
const std::vector<std::string>& valid_subset_keys();

/// Throws ValidationError naming every valid key when `key` is unknown.
void require_valid_subset_key(const std::string& key);

/// Throws ValidationError for a grounded open-ended example without paragraphs.
void validate_example(const IFTExample& example);

IFTExample ift_example_from_json(const json& j);
std::vector<IFTExample> load_ift(const std::filesystem::path& path);

/// Closed-ended: the full prompt. Grounded open-ended: the context paragraphs
/// joined by blank lines, distractors excluded. Ungrounded open-ended: none.
std::optional<std::string> context_for_example(const IFTExample& example);

struct SubsetRow {
    std::string key;
    std::size_t size = 0;
    std::optional<double> avg_claims;
    /// Macro claim support w.r.t. the example's own context; nullopt shows as "-".
    std::optional<double> claim_support_pct;
    std::optional<double> claim_support_micro_pct;
    std::size_t failures = 0;
};

struct SubsetReportOptions {
    std::size_t concurrency = 4;
    /// Rows to emit; empty means every key present in the data.
    std::vector<std::string> rows;
};

std::vector<SubsetRow> subset_report(const std::vector<IFTExample>& examples, Judge& judge,
                                     const SubsetReportOptions& options = {});

json subset_report_to_json(const std::vector<SubsetRow>& rows);
std::string subset_report_csv(const std::vector<SubsetRow>& rows);

struct FilterResult {
    std::vector<IFTExample> kept;
    /// {excluded, counts_before, counts_after, total_before, total_after, ids}
    json manifest;
};

/// Drops every example whose subset key is in `exclusions` and emits the
/// training-data manifest for that ablation.
FilterResult filter_ift(const std::vector<IFTExample>& examples,
                        const std::set<std::string>& exclusions);

// --- Climate-FEVER -----------------------------------------------------------

enum class FeverLabel { supported, refuted, not_enough_info, disputed };
enum class BinaryLabel { supported, not_supported };

std::string to_string(FeverLabel l);
std::string to_string(BinaryLabel l);
/// Accepts SUPPORTS/REFUTES/NOT_ENOUGH_INFO/DISPUTED in any case, the
/// adjective forms ("supported", ...), and the integer codes 0-3.
std::optional<FeverLabel> fever_label_from_json(const json& v);

enum class FilterOrder {
    /// Map each annotator label to binary, then require agreement on the binary label.
    map_then_unanimity,
    /// Require identical raw labels, then map.
    unanimity_then_map,
};

enum class PairDecision { supported, not_supported, drop_disputed, drop_disagreement };

/// Gold decision for one pair's annotator labels. Any disputed label drops
/// the pair. Without unanimity the mapped majority wins; a tie is a
/// disagreement.
PairDecision decide_pair(const std::vector<FeverLabel>& labels, bool unanimous_only,
                         FilterOrder order = FilterOrder::map_then_unanimity);

struct FeverPair {
    std::string claim_id;
    std::string claim;
    std::string evidence_id;
    std::string evidence;
    std::vector<FeverLabel> annotator_labels;
    BinaryLabel gold = BinaryLabel::not_supported;
};

struct FeverLoadStats {
    std::size_t claims_in = 0;
    std::size_t pairs_in = 0;
    std::size_t pairs_kept = 0;
    std::size_t claims_kept = 0;
    std::size_t dropped_disputed = 0;
    std::size_t dropped_disagreement = 0;
    std::size_t malformed_pairs = 0;
    std::size_t malformed_records = 0;
};

struct FeverDataset {
    std::vector<FeverPair> pairs;
    FeverLoadStats stats;
};

struct FeverLoadOptions {
    bool unanimous_only = true;
    FilterOrder order = FilterOrder::map_then_unanimity;
    /// Also drop every pair of a claim whose claim-level label is DISPUTED.
    bool drop_disputed_claims = true;
};

/// Reads the public JSON-lines release (a top-level JSON array also works).
/// Pairs with fewer than two annotator votes and unreadable records are
/// skipped and counted, so pairs_in = kept + dropped + malformed.
FeverDataset load_climate_fever(const std::filesystem::path& path,
                                const FeverLoadOptions& options = {});

struct Confusion {
    std::size_t supported_as_supported = 0;
    std::size_t supported_as_not = 0;
    std::size_t not_as_supported = 0;
    std::size_t not_as_not = 0;
};

struct FeverVerification {
    std::size_t n = 0;
    std::size_t failures = 0;
    std::optional<double> overall_acc;
    std::optional<double> acc_supported;
    std::optional<double> acc_not_supported;
    Confusion confusion;
    /// Per pair in input order; nullopt where the judge failed.
    std::vector<std::optional<BinaryLabel>> predictions;
};

/// Verifies each pair's claim against its evidence as a single-claim call.
FeverVerification verify_pairs(const std::vector<FeverPair>& pairs, Judge& judge,
                               std::size_t concurrency = 4);

json fever_report_to_json(const FeverLoadStats& stats, const FeverVerification& v);

}  // namespace ragfaith
