#pragma once

#include <chrono>
#include <cstddef>
#include <memory>
#include <optional>
#include <string>

#include "ragfaith/call_cache.hpp"
#include "ragfaith/embedding.hpp"
#include "ragfaith/llm.hpp"

namespace ragfaith {

/// Endpoint settings for one model. Credentials are never part of it: the
/// API key is read from the environment variable named by `api_key_env`.
struct ProviderConfig {
    std::string kind = "mock";  // "mock" | "openai-compatible"
    std::string endpoint;       // e.g. "https://api.openai.com/v1"
    std::string model_id;
    double temperature = 0.0;
    int max_tokens = 2048;
    std::optional<std::int64_t> seed;
    std::size_t concurrency = 4;
    std::size_t batch_size = 32;
    int timeout_s = 60;
    std::size_t max_input_chars = 0;
    std::size_t mock_dim = 256;
    std::string api_key_env = "OPENAI_API_KEY";
    RetryPolicy retry;

    SamplingSettings sampling() const { return {temperature, max_tokens, seed}; }
};

ProviderConfig provider_config_from_json(const json& j);
json to_json(const ProviderConfig& c);

/// Chat-completions client for any OpenAI-compatible endpoint. Each prompt is
/// sent as a single user message.
class OpenAICompatibleLLM final : public LLMProvider {
public:
    OpenAICompatibleLLM(std::string endpoint, std::string model_id, std::string api_key,
                        std::chrono::seconds timeout);

    std::string complete(const std::string& prompt, const SamplingSettings& sampling) override;
    std::string model_id() const override { return model_id_; }

private:
    std::string endpoint_;
    std::string model_id_;
    std::string api_key_;
    std::chrono::seconds timeout_;
};

/// `/embeddings` client for any OpenAI-compatible endpoint.
class OpenAICompatibleEmbedder final : public EmbeddingProvider {
public:
    OpenAICompatibleEmbedder(std::string endpoint, std::string model_id, std::string api_key,
                             std::chrono::seconds timeout, std::size_t max_input_chars);

    std::vector<Embedding> embed(std::span<const std::string> texts) override;
    std::string model_id() const override { return model_id_; }
    std::size_t max_input_chars() const override { return max_input_chars_; }

private:
    std::string endpoint_;
    std::string model_id_;
    std::string api_key_;
    std::chrono::seconds timeout_;
    std::size_t max_input_chars_;
};

/// Throws ConfigError for an unknown kind, a missing endpoint, or an unset
/// credential variable.
std::shared_ptr<LLMProvider> make_llm_provider(const ProviderConfig& config);
std::shared_ptr<EmbeddingProvider> make_embedding_provider(const ProviderConfig& config);

}  // namespace ragfaith
