#include "ragfaith/config.hpp"

#include <set>

#include "ragfaith/error.hpp"

namespace ragfaith {

namespace {

void reject_unknown(const json& j, const std::set<std::string>& allowed, const std::string& where) {
    for (const auto& [key, _] : j.items()) {
        if (!allowed.contains(key)) {
            throw ConfigError("unknown key \"" + key + "\" in " + where);
        }
    }
}

std::filesystem::path resolve(const std::filesystem::path& base, const std::string& p) {
    std::filesystem::path path(p);
    if (path.is_relative() && !base.empty()) {
        path = base / path;
    }
    return path.lexically_normal();
}

}  // namespace

std::string echo_path(const RunConfig& c, const std::filesystem::path& p) {
    if (p.empty()) return "";
    const auto rel = p.lexically_relative(c.base_dir);
    return rel.empty() ? p.generic_string() : rel.generic_string();
}

RunConfig run_config_from_json(const json& j, const std::filesystem::path& base_dir) {
    if (!j.is_object()) {
        throw ConfigError("config must be a JSON object");
    }
    reject_unknown(j,
                   {"corpus", "index_dir", "cache_dir", "out", "ingestion", "embedding", "judge",
                    "generator", "retrieval", "pipeline"},
                   "config");
    RunConfig c;
    c.base_dir = (base_dir.empty() ? std::filesystem::current_path()
                                   : std::filesystem::absolute(base_dir))
                     .lexically_normal();
    if (!c.base_dir.has_filename()) c.base_dir = c.base_dir.parent_path();
    c.index_dir = resolve(c.base_dir, c.index_dir.string());
    c.cache_dir = resolve(c.base_dir, c.cache_dir.string());
    c.out = resolve(c.base_dir, c.out.string());
    try {
        if (j.contains("corpus")) c.corpus = resolve(c.base_dir, j["corpus"].get<std::string>());
        c.index_dir = resolve(c.base_dir, j.value("index_dir", c.index_dir.string()));
        c.cache_dir = resolve(c.base_dir, j.value("cache_dir", c.cache_dir.string()));
        c.out = resolve(c.base_dir, j.value("out", c.out.string()));

        if (j.contains("ingestion")) {
            const auto& g = j["ingestion"];
            reject_unknown(g, {"window", "stride", "page_delimiter"}, "ingestion");
            c.ingestion.window = g.value("window", c.ingestion.window);
            if (g.contains("stride") && !g["stride"].is_null()) {
                c.ingestion.stride = g["stride"].get<std::size_t>();
            }
            c.ingestion.page_delimiter = g.value("page_delimiter", c.ingestion.page_delimiter);
        }
        if (j.contains("embedding")) c.embedding = provider_config_from_json(j["embedding"]);
        if (j.contains("judge")) c.judge = provider_config_from_json(j["judge"]);
        c.generator = j.contains("generator") ? provider_config_from_json(j["generator"]) : c.judge;

        if (j.contains("retrieval")) {
            const auto& r = j["retrieval"];
            reject_unknown(r, {"top_pages", "top_snippets", "k", "page_scoring", "query_prefix"},
                           "retrieval");
            c.retrieval.top_pages = r.value("top_pages", c.retrieval.top_pages);
            c.retrieval.top_snippets = r.value("top_snippets", c.retrieval.top_snippets);
            c.k = r.value("k", c.k);
            if (r.contains("page_scoring")) {
                c.retrieval.page_scoring =
                    page_scoring_from_string(r["page_scoring"].get<std::string>());
            }
            c.retrieval.query_prefix = r.value("query_prefix", c.retrieval.query_prefix);
        }
        if (j.contains("pipeline")) {
            const auto& p = j["pipeline"];
            reject_unknown(p, {"threshold", "averaging", "concurrency", "evidence_headers"},
                           "pipeline");
            c.pipeline.threshold_pct = p.value("threshold", c.pipeline.threshold_pct);
            if (p.contains("averaging")) {
                c.pipeline.averaging = averaging_from_string(p["averaging"].get<std::string>());
            }
            c.pipeline.concurrency = p.value("concurrency", c.pipeline.concurrency);
            c.pipeline.evidence_headers = p.value("evidence_headers", c.pipeline.evidence_headers);
        }
    } catch (const json::exception& e) {
        throw ConfigError(std::string("bad config value: ") + e.what());
    } catch (const ValidationError& e) {
        throw ConfigError(e.what());
    }
    return c;
}

RunConfig load_run_config(const std::filesystem::path& path) {
    if (!std::filesystem::is_regular_file(path)) {
        throw ConfigError("config file not found: " + path.string());
    }
    json j;
    try {
        j = json::parse(read_file(path));
    } catch (const json::parse_error& e) {
        throw ConfigError("config " + path.string() + " is not valid JSON: " + e.what());
    }
    return run_config_from_json(j, path.parent_path());
}

json to_json(const RunConfig& c) {
    return {{"corpus", echo_path(c, c.corpus)},
            {"index_dir", echo_path(c, c.index_dir)},
            {"cache_dir", echo_path(c, c.cache_dir)},
            {"out", echo_path(c, c.out)},
            {"ingestion",
             {{"window", c.ingestion.window},
              {"stride", c.ingestion.effective_stride()},
              {"page_delimiter", c.ingestion.page_delimiter}}},
            {"embedding", to_json(c.embedding)},
            {"judge", to_json(c.judge)},
            {"generator", to_json(c.generator)},
            {"retrieval",
             {{"top_pages", c.retrieval.top_pages},
              {"top_snippets", c.retrieval.top_snippets},
              {"k", c.k},
              {"page_scoring", to_string(c.retrieval.page_scoring)},
              {"query_prefix", c.retrieval.query_prefix}}},
            {"pipeline",
             {{"threshold", c.pipeline.threshold_pct},
              {"averaging", to_string(c.pipeline.averaging)},
              {"concurrency", c.pipeline.concurrency},
              {"evidence_headers", c.pipeline.evidence_headers}}}};
}

void validate(const RunConfig& c) {
    if (c.ingestion.window == 0) throw ConfigError("ingestion.window must be >= 1");
    const std::size_t stride = c.ingestion.effective_stride();
    if (stride == 0 || stride > c.ingestion.window) {
        throw ConfigError("ingestion.stride must be in [1, window]");
    }
    if (c.retrieval.top_pages == 0) throw ConfigError("retrieval.top_pages must be >= 1");
    if (c.retrieval.top_snippets == 0) throw ConfigError("retrieval.top_snippets must be >= 1");
    if (c.k == 0) throw ConfigError("retrieval.k must be >= 1");
    if (c.pipeline.threshold_pct < 0.0 || c.pipeline.threshold_pct > 100.0) {
        throw ConfigError("pipeline.threshold must be in [0, 100]");
    }
    if (c.pipeline.concurrency == 0) throw ConfigError("pipeline.concurrency must be >= 1");
    for (const auto* p : {&c.embedding, &c.judge, &c.generator}) {
        if (p->retry.max_attempts < 1) throw ConfigError("retry.max_attempts must be >= 1");
        if (p->kind == "openai-compatible" && p->endpoint.empty()) {
            throw ConfigError("openai-compatible provider needs an endpoint");
        }
    }
    for (const auto& [name, path] : {std::pair{"cache_dir", &c.cache_dir}, {"out", &c.out},
                                     {"index_dir", &c.index_dir}}) {
        if (std::filesystem::exists(*path) && !std::filesystem::is_directory(*path)) {
            throw ConfigError(std::string(name) + " is not a directory: " + path->string());
        }
    }
}

}  // namespace ragfaith
