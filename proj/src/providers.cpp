#define CPPHTTPLIB_OPENSSL_SUPPORT
#include "ragfaith/providers.hpp"

#include <httplib.h>

#include <cstdlib>

#include "ragfaith/error.hpp"

namespace ragfaith {

namespace {

struct ParsedUrl {
    std::string origin;  // scheme://host[:port]
    std::string base_path;
};

ParsedUrl parse_url(const std::string& url) {
    const std::size_t scheme_end = url.find("://");
    if (scheme_end == std::string::npos) {
        throw ConfigError("endpoint must include a scheme: " + url);
    }
    const std::string scheme = url.substr(0, scheme_end);
    if (scheme != "http" && scheme != "https") {
        throw ConfigError("unsupported endpoint scheme: " + scheme);
    }
    const std::size_t path_start = url.find('/', scheme_end + 3);
    ParsedUrl out;
    out.origin = url.substr(0, path_start);
    out.base_path = path_start == std::string::npos ? "" : url.substr(path_start);
    while (!out.base_path.empty() && out.base_path.back() == '/') out.base_path.pop_back();
    return out;
}

json post_json(const std::string& endpoint, const std::string& route, const std::string& api_key,
               std::chrono::seconds timeout, const json& body) {
    const ParsedUrl url = parse_url(endpoint);
    httplib::Client client(url.origin);
    client.set_connection_timeout(timeout);
    client.set_read_timeout(timeout);
    client.set_write_timeout(timeout);
    httplib::Headers headers;
    if (!api_key.empty()) {
        headers.emplace("Authorization", "Bearer " + api_key);
    }
    auto res = client.Post(url.base_path + route, headers, body.dump(), "application/json");
    if (!res) {
        throw ProviderError("request to " + endpoint + route +
                            " failed: " + httplib::to_string(res.error()));
    }
    if (res->status != 200) {
        throw ProviderError("HTTP " + std::to_string(res->status) + " from " + endpoint + route +
                            ": " + res->body.substr(0, 300));
    }
    try {
        return json::parse(res->body);
    } catch (const json::parse_error& e) {
        throw ProviderError("non-JSON response from " + endpoint + route + ": " + e.what());
    }
}

std::string credential(const ProviderConfig& c) {
    if (c.api_key_env.empty()) {
        return {};
    }
    const char* value = std::getenv(c.api_key_env.c_str());
    if (value == nullptr || *value == '\0') {
        throw ConfigError("environment variable " + c.api_key_env +
                          " is not set; export it or set api_key_env to \"\" for endpoints "
                          "without authentication");
    }
    return value;
}

}  // namespace

ProviderConfig provider_config_from_json(const json& j) {
    ProviderConfig c;
    if (!j.is_object()) {
        throw ConfigError("provider config must be an object");
    }
    try {
        c.kind = j.value("kind", c.kind);
        c.endpoint = j.value("endpoint", c.endpoint);
        c.model_id = j.value("model_id", c.model_id);
        c.temperature = j.value("temperature", c.temperature);
        c.max_tokens = j.value("max_tokens", c.max_tokens);
        if (j.contains("seed") && !j["seed"].is_null()) c.seed = j["seed"].get<std::int64_t>();
        c.concurrency = j.value("concurrency", c.concurrency);
        c.batch_size = j.value("batch_size", c.batch_size);
        c.timeout_s = j.value("timeout_s", c.timeout_s);
        c.max_input_chars = j.value("max_input_chars", c.max_input_chars);
        c.mock_dim = j.value("mock_dim", c.mock_dim);
        c.api_key_env = j.value("api_key_env", c.api_key_env);
        if (j.contains("retry")) {
            const auto& r = j["retry"];
            c.retry.max_attempts = r.value("max_attempts", c.retry.max_attempts);
            c.retry.initial_backoff =
                std::chrono::milliseconds(r.value("backoff_ms", c.retry.initial_backoff.count()));
            c.retry.multiplier = r.value("multiplier", c.retry.multiplier);
        }
    } catch (const json::exception& e) {
        throw ConfigError(std::string("bad provider config: ") + e.what());
    }
    if (c.kind != "mock" && c.kind != "openai-compatible") {
        throw ConfigError("unknown provider kind \"" + c.kind +
                          "\" (expected mock or openai-compatible)");
    }
    return c;
}

json to_json(const ProviderConfig& c) {
    return {{"kind", c.kind},
            {"endpoint", c.endpoint},
            {"model_id", c.model_id},
            {"temperature", c.temperature},
            {"max_tokens", c.max_tokens},
            {"seed", c.seed ? json(*c.seed) : json(nullptr)},
            {"concurrency", c.concurrency},
            {"batch_size", c.batch_size},
            {"timeout_s", c.timeout_s},
            {"max_input_chars", c.max_input_chars},
            {"mock_dim", c.mock_dim},
            {"api_key_env", c.api_key_env},
            {"retry",
             {{"max_attempts", c.retry.max_attempts},
              {"backoff_ms", c.retry.initial_backoff.count()},
              {"multiplier", c.retry.multiplier}}}};
}

OpenAICompatibleLLM::OpenAICompatibleLLM(std::string endpoint, std::string model_id,
                                         std::string api_key, std::chrono::seconds timeout)
    : endpoint_(std::move(endpoint)),
      model_id_(std::move(model_id)),
      api_key_(std::move(api_key)),
      timeout_(timeout) {
    parse_url(endpoint_);
}

std::string OpenAICompatibleLLM::complete(const std::string& prompt,
                                          const SamplingSettings& sampling) {
    json body = {{"model", model_id_},
                 {"messages", json::array({{{"role", "user"}, {"content", prompt}}})},
                 {"temperature", sampling.temperature},
                 {"max_tokens", sampling.max_tokens}};
    if (sampling.seed) body["seed"] = *sampling.seed;
    const json res = post_json(endpoint_, "/chat/completions", api_key_, timeout_, body);
    try {
        return res.at("choices").at(0).at("message").at("content").get<std::string>();
    } catch (const json::exception& e) {
        throw ProviderError(std::string("unexpected chat completion shape: ") + e.what());
    }
}

OpenAICompatibleEmbedder::OpenAICompatibleEmbedder(std::string endpoint, std::string model_id,
                                                   std::string api_key,
                                                   std::chrono::seconds timeout,
                                                   std::size_t max_input_chars)
    : endpoint_(std::move(endpoint)),
      model_id_(std::move(model_id)),
      api_key_(std::move(api_key)),
      timeout_(timeout),
      max_input_chars_(max_input_chars) {
    parse_url(endpoint_);
}

std::vector<Embedding> OpenAICompatibleEmbedder::embed(std::span<const std::string> texts) {
    const json body = {{"model", model_id_},
                       {"input", std::vector<std::string>(texts.begin(), texts.end())}};
    const json res = post_json(endpoint_, "/embeddings", api_key_, timeout_, body);
    std::vector<Embedding> out(texts.size());
    try {
        const auto& data = res.at("data");
        if (data.size() != texts.size()) {
            throw ProviderError("embedding response has " + std::to_string(data.size()) +
                                " items for " + std::to_string(texts.size()) + " inputs");
        }
        for (std::size_t i = 0; i < data.size(); ++i) {
            const std::size_t idx = data[i].value("index", i);
            if (idx >= out.size()) {
                throw ProviderError("embedding response index out of range");
            }
            out[idx] = data[i].at("embedding").get<Embedding>();
        }
    } catch (const json::exception& e) {
        throw ProviderError(std::string("unexpected embedding response shape: ") + e.what());
    }
    return out;
}

std::shared_ptr<LLMProvider> make_llm_provider(const ProviderConfig& c) {
    if (c.kind == "mock") {
        return std::make_shared<MockJudgeProvider>();
    }
    if (c.endpoint.empty() || c.model_id.empty()) {
        throw ConfigError("openai-compatible judge needs endpoint and model_id");
    }
    return std::make_shared<OpenAICompatibleLLM>(c.endpoint, c.model_id, credential(c),
                                                 std::chrono::seconds(c.timeout_s));
}

std::shared_ptr<EmbeddingProvider> make_embedding_provider(const ProviderConfig& c) {
    if (c.kind == "mock") {
        return std::make_shared<HashingEmbedder>(c.mock_dim);
    }
    if (c.endpoint.empty() || c.model_id.empty()) {
        throw ConfigError("openai-compatible embedder needs endpoint and model_id");
    }
    return std::make_shared<OpenAICompatibleEmbedder>(c.endpoint, c.model_id, credential(c),
                                                      std::chrono::seconds(c.timeout_s),
                                                      c.max_input_chars);
}

}  // namespace ragfaith
