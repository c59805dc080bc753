#include "ragfaith/metrics.hpp"

#include <algorithm>
#include <cmath>

#include "ragfaith/error.hpp"

namespace ragfaith {

double claim_support(std::span<const int> verdicts) {
    if (verdicts.empty()) {
        throw ValidationError("claim support is undefined without verdicts");
    }
    std::size_t supported = 0;
    for (int v : verdicts) {
        if (v != 0 && v != 1) {
            throw ValidationError("verdict outside {0,1}");
        }
        supported += static_cast<std::size_t>(v);
    }
    return 100.0 * static_cast<double>(supported) / static_cast<double>(verdicts.size());
}

bool binary_faithful(double claim_support_pct, double threshold_pct) {
    if (!(claim_support_pct >= 0.0 && claim_support_pct <= 100.0)) {
        throw ValidationError("claim support must lie in [0, 100]");
    }
    return claim_support_pct > threshold_pct;
}

std::string to_string(HumanLabel label) {
    return label == HumanLabel::faithful ? "faithful" : "not_faithful";
}

std::optional<HumanLabel> human_label_from_string(const std::string& s) {
    if (s == "faithful") return HumanLabel::faithful;
    if (s == "not_faithful" || s == "not faithful" || s == "unfaithful") {
        return HumanLabel::not_faithful;
    }
    return std::nullopt;
}

AgreementResult agreement(const std::vector<bool>& predicted, const std::vector<HumanLabel>& gold) {
    if (predicted.size() != gold.size()) {
        throw ValidationError("agreement: " + std::to_string(predicted.size()) +
                              " predictions vs " + std::to_string(gold.size()) + " gold labels");
    }
    if (gold.empty()) {
        throw ValidationError("agreement: no items");
    }
    AgreementResult r;
    r.n = gold.size();
    std::size_t correct = 0;
    std::size_t correct_f = 0;
    std::size_t correct_nf = 0;
    for (std::size_t i = 0; i < gold.size(); ++i) {
        const bool gold_faithful = gold[i] == HumanLabel::faithful;
        const bool hit = predicted[i] == gold_faithful;
        correct += hit;
        if (gold_faithful) {
            ++r.n_faithful;
            correct_f += hit;
        } else {
            ++r.n_not_faithful;
            correct_nf += hit;
        }
    }
    auto pct = [](std::size_t a, std::size_t b) {
        return 100.0 * static_cast<double>(a) / static_cast<double>(b);
    };
    r.overall_acc = pct(correct, r.n);
    if (r.n_faithful > 0) r.acc_faithful = pct(correct_f, r.n_faithful);
    if (r.n_not_faithful > 0) r.acc_not_faithful = pct(correct_nf, r.n_not_faithful);
    return r;
}

void validate_spans(const SpanAnnotation& annotation, std::size_t response_length) {
    for (const auto& [start, end] : annotation.spans) {
        if (!(start < end && end <= response_length)) {
            throw ValidationError("record " + annotation.id + ": span [" + std::to_string(start) +
                                  ", " + std::to_string(end) + ") outside response of length " +
                                  std::to_string(response_length));
        }
    }
}

double hallucination_free_rate(const std::vector<SpanAnnotation>& annotations) {
    if (annotations.empty()) {
        throw ValidationError("hallucination-free rate is undefined without annotations");
    }
    const auto clean = std::count_if(annotations.begin(), annotations.end(),
                                     [](const SpanAnnotation& a) { return a.spans.empty(); });
    return 100.0 * static_cast<double>(clean) / static_cast<double>(annotations.size());
}

}  // namespace ragfaith
