#pragma once

#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "ragfaith/call_cache.hpp"
#include "ragfaith/judge_parse.hpp"
#include "ragfaith/llm.hpp"
#include "ragfaith/prompts.hpp"

namespace ragfaith {

struct ClaimSet {
    std::string source_question;
    std::string source_response;
    std::vector<std::string> claims;

    bool no_claims() const noexcept { return claims.empty(); }
};

/// Verification outcome for one claim: a verdict, or the reason none exists.
struct ClaimOutcome {
    std::optional<Verdict> verdict;
    std::string failure;

    bool ok() const noexcept { return verdict.has_value(); }
};

/// Render-complete-parse loop shared by every templated call. Replies are
/// cached under (template id, prompt, model id, sampling settings) only once
/// they parse. Each attempt, live or replayed, is written to the ledger.
class CachedCaller {
public:
    CachedCaller(std::shared_ptr<LLMProvider> provider, std::shared_ptr<ResponseCache> cache,
                 std::shared_ptr<CallLedger> ledger, SamplingSettings sampling, RetryPolicy retry);

    /// `parse` throws ParseError for unusable replies. Throws JudgeFailure
    /// once the retry budget is spent. With `rethrow_count_mismatch`, a
    /// CountMismatchError propagates immediately instead of being retried.
    template <typename Result>
    Result call(TemplateId id, const std::string& prompt,
                const std::function<Result(const std::string&)>& parse,
                bool rethrow_count_mismatch = false);

    const LLMProvider& provider() const noexcept { return *provider_; }
    const SamplingSettings& sampling() const noexcept { return sampling_; }

private:
    std::optional<std::string> attempt(TemplateId id, const std::string& prompt,
                                       const std::string& key_hash, bool from_cache);
    void log(TemplateId id, const std::string& key_hash, const std::string& prompt,
             const std::string& reply, const std::string& status, bool from_cache);
    json key_for(TemplateId id, const std::string& prompt) const;

    std::shared_ptr<LLMProvider> provider_;
    std::shared_ptr<ResponseCache> cache_;
    std::shared_ptr<CallLedger> ledger_;
    SamplingSettings sampling_;
    RetryPolicy retry_;
};

struct JudgeOptions {
    SamplingSettings sampling;
    RetryPolicy retry;
    std::vector<std::string> leading_pronouns = default_leading_pronouns();
};

/// Claim decomposition and verification against a pluggable LLM.
class Judge {
public:
    Judge(std::shared_ptr<LLMProvider> provider, std::shared_ptr<ResponseCache> cache,
          std::shared_ptr<CallLedger> ledger, JudgeOptions options = {});

    /// Throws JudgeFailure when every attempt failed.
    ClaimSet decompose(const std::string& question, const std::string& answer);

    /// One call for all claims. A miscounted reply splits the batch into
    /// halves recursively; a single claim that keeps failing gets a failure
    /// entry. Result order matches `claims`.
    std::vector<ClaimOutcome> verify(const std::string& context,
                                     const std::vector<std::string>& claims);

    const std::string& model_id() const noexcept { return model_id_; }

private:
    void verify_range(const std::string& context, const std::vector<std::string>& claims,
                      std::size_t lo, std::size_t hi, std::vector<ClaimOutcome>& out);

    CachedCaller caller_;
    JudgeOptions options_;
    std::string model_id_;
};

/// Produces a RAG answer with the standard answer prompt.
class AnswerGenerator {
public:
    AnswerGenerator(std::shared_ptr<LLMProvider> provider, std::shared_ptr<ResponseCache> cache,
                    std::shared_ptr<CallLedger> ledger, SamplingSettings sampling,
                    RetryPolicy retry);

    std::string answer(const std::string& question, const std::vector<RagPassage>& passages);

private:
    CachedCaller caller_;
};

}  // namespace ragfaith
