#pragma once

#include <cstddef>
#include <filesystem>
#include <string>

#include "ragfaith/corpus.hpp"
#include "ragfaith/pipeline.hpp"
#include "ragfaith/providers.hpp"
#include "ragfaith/retrieval.hpp"
#include "ragfaith/util.hpp"

namespace ragfaith {

struct PipelineSettings {
    double threshold_pct = 50.0;
    Averaging averaging = Averaging::macro;
    std::size_t concurrency = 4;
    bool evidence_headers = true;
};

/// Shared configuration of every subcommand. Relative paths resolve against
/// the directory of the config file they were read from.
struct RunConfig {
    /// Directory of the config file; echoed paths are shown relative to it.
    std::filesystem::path base_dir;
    std::filesystem::path corpus;
    std::filesystem::path index_dir = "index";
    std::filesystem::path cache_dir = ".ragfaith-cache";
    std::filesystem::path out = "out";

    IngestionConfig ingestion;
    ProviderConfig embedding;
    ProviderConfig judge;
    /// Answer model for `generate`; defaults to the judge settings.
    ProviderConfig generator;

    RetrievalSettings retrieval;
    /// Snippets retrieved per claim in factuality mode.
    std::size_t k = 5;
    PipelineSettings pipeline;
};

/// Unknown keys are rejected so typos surface as ConfigError.
RunConfig run_config_from_json(const json& j, const std::filesystem::path& base_dir = {});
RunConfig load_run_config(const std::filesystem::path& path);

/// Echo embedded in reports. Credentials never appear in it.
json to_json(const RunConfig& c);

/// `p` relative to the config directory, so echoes do not depend on where
/// a run's directory tree lives.
std::string echo_path(const RunConfig& c, const std::filesystem::path& p);

/// Throws ConfigError naming the first problem: bad numeric ranges, a
/// cache or output path that is not a directory, and so on.
void validate(const RunConfig& c);

}  // namespace ragfaith
