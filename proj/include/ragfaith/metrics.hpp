#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace ragfaith {

/// 100 * supported / total over 0/1 verdicts. Throws ValidationError when empty.
double claim_support(std::span<const int> verdicts);

/// Strictly greater than `threshold_pct`. Throws ValidationError unless the
/// support value lies in [0, 100].
bool binary_faithful(double claim_support_pct, double threshold_pct = 50.0);

enum class HumanLabel { faithful, not_faithful };

std::string to_string(HumanLabel label);
/// nullopt for labels outside the two classes (e.g. "not_applicable").
std::optional<HumanLabel> human_label_from_string(const std::string& s);

struct AgreementResult {
    std::size_t n = 0;
    double overall_acc = 0.0;
    /// Recall for each gold class; nullopt when the class is absent.
    std::optional<double> acc_faithful;
    std::optional<double> acc_not_faithful;
    std::size_t n_faithful = 0;
    std::size_t n_not_faithful = 0;
};

/// Percent agreement between binary predictions and gold labels. Throws
/// ValidationError on length mismatch or empty input.
AgreementResult agreement(const std::vector<bool>& predicted, const std::vector<HumanLabel>& gold);

struct SpanAnnotation {
    std::string id;
    std::vector<std::pair<std::size_t, std::size_t>> spans;
};

/// Throws ValidationError unless every span has 0 <= start < end <= response_length.
void validate_spans(const SpanAnnotation& annotation, std::size_t response_length);

/// Percentage of annotations with no hallucinated span. Throws on empty input.
double hallucination_free_rate(const std::vector<SpanAnnotation>& annotations);

}  // namespace ragfaith
