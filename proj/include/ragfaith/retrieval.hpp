#pragma once

#include <cstddef>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "ragfaith/corpus.hpp"
#include "ragfaith/embedding.hpp"
#include "ragfaith/vector_index.hpp"

namespace ragfaith {

/// How stage one scores a page.
enum class PageScoring {
    /// Cosine against the page's own embedding (page index required).
    embed_page,
    /// Maximum cosine over the page's snippets (page index unused).
    max_snippet,
};

std::string to_string(PageScoring s);
PageScoring page_scoring_from_string(const std::string& s);

struct RetrievalResult {
    SnippetRef snippet;
    /// Position of the snippet in kb.snippets().
    std::size_t snippet_index = 0;
    double page_score = 0.0;
    double snippet_score = 0.0;
};

struct RetrievalSettings {
    std::size_t top_pages = 5;
    std::size_t top_snippets = 5;
    PageScoring page_scoring = PageScoring::embed_page;
    /// Prepended to queries before embedding; empty by default.
    std::string query_prefix;
};

/// Two-stage ranking over a pre-embedded, unit-length query. Stage one keeps
/// the `top_pages` best pages; stage two ranks only their snippets and keeps
/// `top_snippets`. Ties order by (doc_id, page_no, snippet_no) ascending.
/// Asking for more than exists returns everything available.
std::vector<RetrievalResult> retrieve_hierarchical(std::span<const float> query,
                                                   const KnowledgeBase& kb,
                                                   const VectorIndex* page_index,
                                                   const VectorIndex& snippet_index,
                                                   std::size_t top_pages, std::size_t top_snippets,
                                                   PageScoring scoring = PageScoring::embed_page);

struct EvidenceSet {
    std::vector<RetrievalResult> results;
    bool no_evidence() const noexcept { return results.empty(); }
};

/// Read-only once constructed; `provider` must tolerate concurrent calls.
class Retriever {
public:
    Retriever(std::shared_ptr<const KnowledgeBase> kb, std::shared_ptr<const VectorIndex> pages,
              std::shared_ptr<const VectorIndex> snippets,
              std::shared_ptr<EmbeddingProvider> provider, RetrievalSettings settings,
              RetryPolicy retry = {});

    std::vector<RetrievalResult> retrieve(const std::string& query) const;

    /// Same ranking with the claim as query and `k` snippets; an empty
    /// knowledge base yields an empty set rather than an error.
    EvidenceSet retrieve_for_claim(const std::string& claim, std::size_t k) const;

    const KnowledgeBase& kb() const noexcept { return *kb_; }
    const RetrievalSettings& settings() const noexcept { return settings_; }

private:
    std::vector<RetrievalResult> run(const std::string& query, std::size_t k) const;

    std::shared_ptr<const KnowledgeBase> kb_;
    std::shared_ptr<const VectorIndex> pages_;
    std::shared_ptr<const VectorIndex> snippets_;
    std::shared_ptr<EmbeddingProvider> provider_;
    RetrievalSettings settings_;
    RetryPolicy retry_;
};

}  // namespace ragfaith
