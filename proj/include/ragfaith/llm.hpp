#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "ragfaith/tokenizer.hpp"
#include "ragfaith/util.hpp"

namespace ragfaith {

struct SamplingSettings {
    double temperature = 0.0;
    int max_tokens = 2048;
    std::optional<std::int64_t> seed;

    json to_json() const;
};

/// A text-completion endpoint. Implementations must tolerate concurrent calls.
class LLMProvider {
public:
    virtual ~LLMProvider() = default;

    virtual std::string complete(const std::string& prompt, const SamplingSettings& sampling) = 0;
    virtual std::string model_id() const = 0;
};

/// Lowercased word tokens minus a fixed English stopword list.
std::set<std::string> content_tokens(const std::string& text,
                                     const Tokenizer& tokenizer = *default_tokenizer());

/// Sentences split after '.', '!' or '?' followed by whitespace or the end of
/// text; internal whitespace runs collapse to one space.
std::vector<std::string> split_sentences(const std::string& text);

/// Offline judge that answers the three built-in prompt templates:
///   claim extraction   -> one statement per sentence of the answer;
///   claim verification -> verdict 1 iff the claim's content tokens are a
///                         subset of the context's tokens;
///   RAG answer         -> the first sentence of passage [[0]].
/// Output depends only on the prompt text.
class MockJudgeProvider final : public LLMProvider {
public:
    std::string complete(const std::string& prompt, const SamplingSettings& sampling) override;
    std::string model_id() const override { return "mock-judge-v1"; }
};

/// The mock verdict rule on its own, for tests and audits.
bool mock_supported(const std::string& claim, const std::string& context);

}  // namespace ragfaith
