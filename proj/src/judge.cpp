#include "ragfaith/judge.hpp"

#include <thread>

#include "ragfaith/error.hpp"

namespace ragfaith {

CachedCaller::CachedCaller(std::shared_ptr<LLMProvider> provider,
                           std::shared_ptr<ResponseCache> cache,
                           std::shared_ptr<CallLedger> ledger, SamplingSettings sampling,
                           RetryPolicy retry)
    : provider_(std::move(provider)),
      cache_(cache ? std::move(cache) : std::make_shared<ResponseCache>()),
      ledger_(ledger ? std::move(ledger) : std::make_shared<CallLedger>()),
      sampling_(std::move(sampling)),
      retry_(retry) {
    if (!provider_) {
        throw ConfigError("judge provider is not configured");
    }
}

json CachedCaller::key_for(TemplateId id, const std::string& prompt) const {
    return {{"template_id", to_string(id)},
            {"prompt", prompt},
            {"model_id", provider_->model_id()},
            {"sampling", sampling_.to_json()}};
}

void CachedCaller::log(TemplateId id, const std::string& key_hash, const std::string& prompt,
                       const std::string& reply, const std::string& status, bool from_cache) {
    ledger_->append({to_string(id), key_hash, prompt.size(), reply, status,
                     from_cache ? "cache" : "provider"});
}

template <typename Result>
Result CachedCaller::call(TemplateId id, const std::string& prompt,
                          const std::function<Result(const std::string&)>& parse,
                          bool rethrow_count_mismatch) {
    const json key = key_for(id, prompt);
    const std::string key_hash = cache_key_hash(key);

    if (auto cached = cache_->get(key_hash)) {
        try {
            Result r = parse(*cached);
            log(id, key_hash, prompt, *cached, "ok", true);
            return r;
        } catch (const ParseError& e) {
            // Only parsed replies are stored, so this means the parser changed.
            log(id, key_hash, prompt, *cached, std::string("parse_error: ") + e.what(), true);
        }
    }

    std::string last_error = "no attempts made";
    const int attempts = std::max(1, retry_.max_attempts);
    for (int attempt = 1; attempt <= attempts; ++attempt) {
        if (attempt > 1) {
            std::this_thread::sleep_for(retry_.backoff_for(attempt - 1));
        }
        std::string reply;
        try {
            reply = provider_->complete(prompt, sampling_);
        } catch (const ProviderError& e) {
            last_error = std::string("provider_error: ") + e.what();
            log(id, key_hash, prompt, "", last_error, false);
            continue;
        }
        try {
            Result r = parse(reply);
            cache_->put(key_hash, key, reply);
            log(id, key_hash, prompt, reply, "ok", false);
            return r;
        } catch (const CountMismatchError& e) {
            last_error = std::string("count_mismatch: ") + e.what();
            log(id, key_hash, prompt, reply, last_error, false);
            if (rethrow_count_mismatch) throw;
        } catch (const ParseError& e) {
            last_error = std::string("parse_error: ") + e.what();
            log(id, key_hash, prompt, reply, last_error, false);
        }
    }
    throw JudgeFailure(to_string(id) + " failed after " + std::to_string(attempts) +
                       " attempts: " + last_error);
}

template std::vector<std::string> CachedCaller::call(
    TemplateId, const std::string&,
    const std::function<std::vector<std::string>(const std::string&)>&, bool);
template std::vector<Verdict> CachedCaller::call(
    TemplateId, const std::string&, const std::function<std::vector<Verdict>(const std::string&)>&,
    bool);
template std::string CachedCaller::call(TemplateId, const std::string&,
                                        const std::function<std::string(const std::string&)>&,
                                        bool);

Judge::Judge(std::shared_ptr<LLMProvider> provider, std::shared_ptr<ResponseCache> cache,
             std::shared_ptr<CallLedger> ledger, JudgeOptions options)
    : caller_(provider, std::move(cache), std::move(ledger), options.sampling, options.retry),
      options_(std::move(options)),
      model_id_(provider->model_id()) {}

ClaimSet Judge::decompose(const std::string& question, const std::string& answer) {
    const std::string prompt = render_claim_extraction_prompt(question, answer);
    const auto& pronouns = options_.leading_pronouns;
    std::function<std::vector<std::string>(const std::string&)> parse =
        [&pronouns](const std::string& raw) { return parse_claim_extraction(raw, pronouns); };
    auto claims = caller_.call(TemplateId::claim_extraction, prompt, parse);
    return ClaimSet{question, answer, std::move(claims)};
}

void Judge::verify_range(const std::string& context, const std::vector<std::string>& claims,
                         std::size_t lo, std::size_t hi, std::vector<ClaimOutcome>& out) {
    const std::vector<std::string> batch(claims.begin() + static_cast<long>(lo),
                                         claims.begin() + static_cast<long>(hi));
    const std::string prompt = render_claim_verification_prompt(context, batch);
    const std::size_t expected = batch.size();
    std::function<std::vector<Verdict>(const std::string&)> parse =
        [expected](const std::string& raw) { return parse_claim_verification(raw, expected); };
    try {
        auto verdicts =
            caller_.call(TemplateId::claim_verification, prompt, parse, /*rethrow=*/expected > 1);
        for (std::size_t i = 0; i < verdicts.size(); ++i) {
            verdicts[i].claim = batch[i];
            out[lo + i].verdict = std::move(verdicts[i]);
        }
    } catch (const CountMismatchError&) {
        const std::size_t mid = lo + (hi - lo) / 2;
        verify_range(context, claims, lo, mid, out);
        verify_range(context, claims, mid, hi, out);
    } catch (const JudgeFailure& e) {
        for (std::size_t i = lo; i < hi; ++i) out[i].failure = e.what();
    }
}

std::vector<ClaimOutcome> Judge::verify(const std::string& context,
                                        const std::vector<std::string>& claims) {
    std::vector<ClaimOutcome> out(claims.size());
    if (claims.empty()) {
        return out;
    }
    verify_range(context, claims, 0, claims.size(), out);
    return out;
}

AnswerGenerator::AnswerGenerator(std::shared_ptr<LLMProvider> provider,
                                 std::shared_ptr<ResponseCache> cache,
                                 std::shared_ptr<CallLedger> ledger, SamplingSettings sampling,
                                 RetryPolicy retry)
    : caller_(std::move(provider), std::move(cache), std::move(ledger), std::move(sampling),
              retry) {}

std::string AnswerGenerator::answer(const std::string& question,
                                    const std::vector<RagPassage>& passages) {
    const std::string prompt = render_rag_prompt(question, passages);
    std::function<std::string(const std::string&)> parse = [](const std::string& raw) {
        std::string t = trim(raw);
        if (t.empty()) {
            throw ParseError("empty answer", raw);
        }
        return t;
    };
    return caller_.call(TemplateId::rag_answer, prompt, parse);
}

}  // namespace ragfaith
