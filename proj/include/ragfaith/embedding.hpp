#pragma once

#include <cstddef>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "ragfaith/call_cache.hpp"
#include "ragfaith/tokenizer.hpp"

namespace ragfaith {

using Embedding = std::vector<float>;

/// Must be safe for concurrent calls. Output order matches input order.
class EmbeddingProvider {
public:
    virtual ~EmbeddingProvider() = default;

    virtual std::vector<Embedding> embed(std::span<const std::string> texts) = 0;
    virtual std::string model_id() const = 0;
    /// Longest input in bytes the model accepts; 0 means unlimited.
    virtual std::size_t max_input_chars() const { return 0; }
};

/// Throws ValidationError("degenerate embedding") for a zero or non-finite vector.
void normalize_in_place(Embedding& v);

/// dot(a,b) / (|a| |b|), accumulated in double.
double cosine_similarity(std::span<const float> a, std::span<const float> b);

double dot(std::span<const float> a, std::span<const float> b);

/// Deterministic signed feature-hashing bag-of-words embedder. Equal texts map
/// to equal vectors in every process; no model or network is involved.
class HashingEmbedder final : public EmbeddingProvider {
public:
    explicit HashingEmbedder(std::size_t dim = 256,
                             std::shared_ptr<const Tokenizer> tokenizer = default_tokenizer());

    std::vector<Embedding> embed(std::span<const std::string> texts) override;
    std::string model_id() const override;

    Embedding embed_one(const std::string& text) const;

private:
    std::size_t dim_;
    std::shared_ptr<const Tokenizer> tokenizer_;
};

/// Calls `provider.embed` with up to `retry.max_attempts` attempts and
/// exponential backoff; rethrows the last ProviderError.
std::vector<Embedding> embed_with_retry(EmbeddingProvider& provider,
                                        std::span<const std::string> texts,
                                        const RetryPolicy& retry);

/// Content-addressed cache in front of another provider, keyed by
/// (model_id, text). Cache misses are forwarded as one batch and logged.
class CachingEmbeddingProvider final : public EmbeddingProvider {
public:
    CachingEmbeddingProvider(std::shared_ptr<EmbeddingProvider> inner,
                             std::shared_ptr<ResponseCache> cache,
                             std::shared_ptr<CallLedger> ledger);

    std::vector<Embedding> embed(std::span<const std::string> texts) override;
    std::string model_id() const override { return inner_->model_id(); }
    std::size_t max_input_chars() const override { return inner_->max_input_chars(); }

private:
    std::shared_ptr<EmbeddingProvider> inner_;
    std::shared_ptr<ResponseCache> cache_;
    std::shared_ptr<CallLedger> ledger_;
};

}  // namespace ragfaith
