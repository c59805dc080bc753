#include "ragfaith/embedding.hpp"

#include <cmath>
#include <thread>

#include "ragfaith/error.hpp"
#include "ragfaith/util.hpp"

namespace ragfaith {

void normalize_in_place(Embedding& v) {
    double sq = 0.0;
    for (float x : v) {
        sq += static_cast<double>(x) * static_cast<double>(x);
    }
    const double norm = std::sqrt(sq);
    if (!(norm > 0.0) || !std::isfinite(norm)) {
        throw ValidationError("degenerate embedding");
    }
    for (float& x : v) {
        x = static_cast<float>(static_cast<double>(x) / norm);
    }
}

double dot(std::span<const float> a, std::span<const float> b) {
    if (a.size() != b.size()) {
        throw ValidationError("embedding dimensions differ: " + std::to_string(a.size()) +
                              " vs " + std::to_string(b.size()));
    }
    double acc = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        acc += static_cast<double>(a[i]) * static_cast<double>(b[i]);
    }
    return acc;
}

double cosine_similarity(std::span<const float> a, std::span<const float> b) {
    const double ab = dot(a, b);
    const double na = std::sqrt(dot(a, a));
    const double nb = std::sqrt(dot(b, b));
    if (!(na > 0.0) || !(nb > 0.0)) {
        throw ValidationError("degenerate embedding");
    }
    return std::clamp(ab / (na * nb), -1.0, 1.0);
}

HashingEmbedder::HashingEmbedder(std::size_t dim, std::shared_ptr<const Tokenizer> tokenizer)
    : dim_(dim), tokenizer_(std::move(tokenizer)) {
    if (dim_ < 2) {
        throw ConfigError("hashing embedder needs dim >= 2");
    }
}

std::string HashingEmbedder::model_id() const {
    return "hashing-bow-" + std::to_string(dim_) + "/" + tokenizer_->name();
}

Embedding HashingEmbedder::embed_one(const std::string& text) const {
    Embedding v(dim_, 0.0f);
    auto words = word_tokens(*tokenizer_, text);
    if (words.empty()) {
        // Texts without words all share one bucket rather than a zero vector.
        words.emplace_back();
    }
    for (const auto& w : words) {
        const std::uint64_t h = fnv1a64(w);
        const std::size_t bucket = static_cast<std::size_t>(h % dim_);
        v[bucket] += ((h >> 63) != 0U) ? -1.0f : 1.0f;
    }
    bool any = false;
    for (float x : v) any = any || x != 0.0f;
    if (!any) {
        // Opposite signs cancelled out; fall back to the first word's bucket.
        v[static_cast<std::size_t>(fnv1a64(words.front()) % dim_)] = 1.0f;
    }
    normalize_in_place(v);
    return v;
}

std::vector<Embedding> HashingEmbedder::embed(std::span<const std::string> texts) {
    std::vector<Embedding> out;
    out.reserve(texts.size());
    for (const auto& t : texts) {
        out.push_back(embed_one(t));
    }
    return out;
}

std::vector<Embedding> embed_with_retry(EmbeddingProvider& provider,
                                        std::span<const std::string> texts,
                                        const RetryPolicy& retry) {
    const int attempts = std::max(1, retry.max_attempts);
    for (int attempt = 1;; ++attempt) {
        try {
            auto out = provider.embed(texts);
            if (out.size() != texts.size()) {
                throw ProviderError("embedding provider returned " + std::to_string(out.size()) +
                                    " vectors for " + std::to_string(texts.size()) + " inputs");
            }
            return out;
        } catch (const ProviderError&) {
            if (attempt >= attempts) {
                throw;
            }
            std::this_thread::sleep_for(retry.backoff_for(attempt));
        }
    }
}

CachingEmbeddingProvider::CachingEmbeddingProvider(std::shared_ptr<EmbeddingProvider> inner,
                                                   std::shared_ptr<ResponseCache> cache,
                                                   std::shared_ptr<CallLedger> ledger)
    : inner_(std::move(inner)), cache_(std::move(cache)), ledger_(std::move(ledger)) {}

std::vector<Embedding> CachingEmbeddingProvider::embed(std::span<const std::string> texts) {
    const std::string model = inner_->model_id();
    std::vector<Embedding> out(texts.size());
    std::vector<std::size_t> missing;
    std::vector<std::string> keys(texts.size());
    for (std::size_t i = 0; i < texts.size(); ++i) {
        const json key = {{"kind", "embedding"}, {"model_id", model}, {"text", texts[i]}};
        keys[i] = cache_key_hash(key);
        if (auto hit = cache_->get(keys[i])) {
            out[i] = json::parse(*hit).get<Embedding>();
        } else {
            missing.push_back(i);
        }
    }
    if (missing.empty()) {
        return out;
    }
    std::vector<std::string> batch;
    std::size_t chars = 0;
    for (std::size_t i : missing) {
        batch.push_back(texts[i]);
        chars += texts[i].size();
    }
    auto vectors = inner_->embed(batch);
    if (vectors.size() != batch.size()) {
        throw ProviderError("embedding provider returned wrong batch size");
    }
    std::string batch_keys;
    for (std::size_t j = 0; j < missing.size(); ++j) {
        const std::size_t i = missing[j];
        const json key = {{"kind", "embedding"}, {"model_id", model}, {"text", texts[i]}};
        cache_->put(keys[i], key, json(vectors[j]).dump());
        batch_keys += keys[i];
        out[i] = std::move(vectors[j]);
    }
    if (ledger_) {
        ledger_->append({"embedding", sha256_hex(batch_keys), chars,
                         std::to_string(missing.size()) + " vectors", "ok", "provider"});
    }
    return out;
}

}  // namespace ragfaith
