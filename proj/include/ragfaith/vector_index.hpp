#pragma once

#include <cstddef>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "ragfaith/call_cache.hpp"
#include "ragfaith/corpus.hpp"
#include "ragfaith/embedding.hpp"

namespace ragfaith {

enum class Granularity { page, snippet };

std::string to_string(Granularity g);
Granularity granularity_from_string(const std::string& s);

/// Exhaustive exact-search index. Item i corresponds to kb.pages()[i] or
/// kb.snippets()[i]; stored vectors are unit length.
class VectorIndex {
public:
    static constexpr std::uint32_t kFormatVersion = 1;

    VectorIndex() = default;
    VectorIndex(Granularity granularity, std::string model_id, std::size_t dim,
                std::string kb_fingerprint, std::vector<std::string> ids,
                std::vector<float> flat_vectors);

    Granularity granularity() const noexcept { return granularity_; }
    const std::string& model_id() const noexcept { return model_id_; }
    const std::string& kb_fingerprint() const noexcept { return kb_fingerprint_; }
    std::size_t dim() const noexcept { return dim_; }
    std::size_t size() const noexcept { return ids_.size(); }
    bool empty() const noexcept { return ids_.empty(); }
    const std::vector<std::string>& ids() const noexcept { return ids_; }
    std::span<const float> vector(std::size_t i) const;

    /// Versioned binary container: magic, version, JSON header, float32 payload.
    std::string serialize() const;
    static VectorIndex deserialize(const std::string& bytes);
    void save(const std::filesystem::path& path) const;
    static VectorIndex load(const std::filesystem::path& path);

private:
    Granularity granularity_ = Granularity::snippet;
    std::string model_id_;
    std::size_t dim_ = 0;
    std::string kb_fingerprint_;
    std::vector<std::string> ids_;
    std::vector<float> vectors_;
};

struct IndexBuildOptions {
    std::size_t batch_size = 32;
    /// Upper bound on batches embedded in parallel.
    std::size_t concurrency = 1;
    RetryPolicy retry;
};

/// Item ids at a granularity: "doc:page" for pages, SnippetRef::str() for snippets.
std::vector<std::string> index_item_ids(const KnowledgeBase& kb, Granularity granularity);

/// Throws ValidationError for an empty knowledge base, EmbeddingError (with
/// the count of items embedded so far) once retries are exhausted.
VectorIndex build_index(const KnowledgeBase& kb, EmbeddingProvider& provider,
                        Granularity granularity, const IndexBuildOptions& options = {});

/// True when `index` was built from `kb` with `model_id` at `granularity`.
bool index_is_current(const VectorIndex& index, const KnowledgeBase& kb,
                      const std::string& model_id, Granularity granularity);

}  // namespace ragfaith
