#include "ragfaith/retrieval.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "ragfaith/error.hpp"

namespace ragfaith {

std::string to_string(PageScoring s) {
    return s == PageScoring::embed_page ? "embed_page" : "max_snippet";
}

PageScoring page_scoring_from_string(const std::string& s) {
    if (s == "embed_page") return PageScoring::embed_page;
    if (s == "max_snippet") return PageScoring::max_snippet;
    throw ConfigError("unknown page_scoring: " + s + " (expected embed_page or max_snippet)");
}

namespace {

double checked(double score) {
    if (!std::isfinite(score)) {
        throw ValidationError("non-finite retrieval score");
    }
    return score;
}

}  // namespace

std::vector<RetrievalResult> retrieve_hierarchical(std::span<const float> query,
                                                   const KnowledgeBase& kb,
                                                   const VectorIndex* page_index,
                                                   const VectorIndex& snippet_index,
                                                   std::size_t top_pages, std::size_t top_snippets,
                                                   PageScoring scoring) {
    const auto& pages = kb.pages();
    const auto& snippets = kb.snippets();
    if (snippets.empty() || top_pages == 0 || top_snippets == 0) {
        return {};
    }
    if (snippet_index.size() != snippets.size()) {
        throw ValidationError("snippet index does not cover the knowledge base");
    }

    std::vector<double> snippet_scores(snippets.size(), 0.0);
    std::vector<bool> snippet_scored(snippets.size(), false);
    auto score_snippet = [&](std::size_t s) {
        if (!snippet_scored[s]) {
            snippet_scores[s] = checked(dot(query, snippet_index.vector(s)));
            snippet_scored[s] = true;
        }
        return snippet_scores[s];
    };

    std::vector<double> page_scores(pages.size(), 0.0);
    std::vector<std::size_t> page_order;
    for (std::size_t p = 0; p < pages.size(); ++p) {
        const auto [lo, hi] = kb.snippets_of_page(p);
        if (lo == hi) {
            continue;  // nothing to return from an empty page
        }
        if (scoring == PageScoring::embed_page) {
            if (page_index == nullptr || page_index->size() != pages.size()) {
                throw ValidationError("page index does not cover the knowledge base");
            }
            page_scores[p] = checked(dot(query, page_index->vector(p)));
        } else {
            double best = -2.0;
            for (std::size_t s = lo; s < hi; ++s) best = std::max(best, score_snippet(s));
            page_scores[p] = best;
        }
        page_order.push_back(p);
    }

    auto page_before = [&](std::size_t a, std::size_t b) {
        if (page_scores[a] != page_scores[b]) return page_scores[a] > page_scores[b];
        if (pages[a].doc_id != pages[b].doc_id) return pages[a].doc_id < pages[b].doc_id;
        return pages[a].page_no < pages[b].page_no;
    };
    const std::size_t n_pages = std::min(top_pages, page_order.size());
    std::partial_sort(page_order.begin(), page_order.begin() + static_cast<long>(n_pages),
                      page_order.end(), page_before);
    page_order.resize(n_pages);

    std::vector<RetrievalResult> candidates;
    for (std::size_t p : page_order) {
        const auto [lo, hi] = kb.snippets_of_page(p);
        for (std::size_t s = lo; s < hi; ++s) {
            candidates.push_back({snippets[s].ref(), s, page_scores[p], score_snippet(s)});
        }
    }
    auto result_before = [](const RetrievalResult& a, const RetrievalResult& b) {
        if (a.snippet_score != b.snippet_score) return a.snippet_score > b.snippet_score;
        return a.snippet < b.snippet;
    };
    const std::size_t n_out = std::min(top_snippets, candidates.size());
    std::partial_sort(candidates.begin(), candidates.begin() + static_cast<long>(n_out),
                      candidates.end(), result_before);
    candidates.resize(n_out);
    return candidates;
}

Retriever::Retriever(std::shared_ptr<const KnowledgeBase> kb,
                     std::shared_ptr<const VectorIndex> pages,
                     std::shared_ptr<const VectorIndex> snippets,
                     std::shared_ptr<EmbeddingProvider> provider, RetrievalSettings settings,
                     RetryPolicy retry)
    : kb_(std::move(kb)),
      pages_(std::move(pages)),
      snippets_(std::move(snippets)),
      provider_(std::move(provider)),
      settings_(std::move(settings)),
      retry_(retry) {
    if (!kb_ || !snippets_) {
        throw ConfigError("retriever needs a knowledge base and a snippet index");
    }
}

std::vector<RetrievalResult> Retriever::run(const std::string& query, std::size_t k) const {
    if (trim(query).empty()) {
        throw ValidationError("retrieval query is empty");
    }
    if (kb_->snippets().empty()) {
        return {};
    }
    const std::vector<std::string> batch{settings_.query_prefix + query};
    auto vectors = embed_with_retry(*provider_, batch, retry_);
    Embedding q = std::move(vectors.at(0));
    normalize_in_place(q);
    if (q.size() != snippets_->dim()) {
        throw ValidationError("query embedding dimension does not match the index");
    }
    return retrieve_hierarchical(q, *kb_, pages_.get(), *snippets_, settings_.top_pages, k,
                                 settings_.page_scoring);
}

std::vector<RetrievalResult> Retriever::retrieve(const std::string& query) const {
    return run(query, settings_.top_snippets);
}

EvidenceSet Retriever::retrieve_for_claim(const std::string& claim, std::size_t k) const {
    return EvidenceSet{run(claim, k)};
}

}  // namespace ragfaith
