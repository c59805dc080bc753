#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "ragfaith/tokenizer.hpp"

namespace ragfaith {

struct Document {
    std::string id;
    std::string title;
    std::optional<int> year;
    std::string source;
    std::string text;
};

struct Page {
    std::string doc_id;
    std::size_t page_no = 0;
    std::string text;
};

struct TokenSpan {
    std::size_t start = 0;
    std::size_t length = 0;
    bool operator==(const TokenSpan&) const = default;
};

/// Identifies a snippet; orders by (doc_id, page_no, snippet_no).
struct SnippetRef {
    std::string doc_id;
    std::size_t page_no = 0;
    std::size_t snippet_no = 0;

    auto operator<=>(const SnippetRef&) const = default;
    /// "doc_id:page_no:snippet_no"
    std::string str() const;
};

struct Snippet {
    std::string doc_id;
    std::size_t page_no = 0;
    std::size_t snippet_no = 0;
    TokenSpan span;
    std::string text;

    SnippetRef ref() const { return {doc_id, page_no, snippet_no}; }
};

struct IngestionConfig {
    std::size_t window = 115;
    /// Unset means stride == window (non-overlapping snippets).
    std::optional<std::size_t> stride;
    /// Splits un-paged documents; empty disables splitting.
    std::string page_delimiter = "\f";

    std::size_t effective_stride() const { return stride.value_or(window); }
};

/// Window starts at every multiple of `stride` below `n_tokens`; the last
/// windows may be shorter than `window`. Throws ValidationError unless
/// window >= 1 and 1 <= stride <= window.
std::vector<TokenSpan> window_spans(std::size_t n_tokens, std::size_t window, std::size_t stride);

std::vector<Snippet> chunk_page(const Page& page, const Tokenizer& tokenizer, std::size_t window,
                                std::size_t stride);

/// Splits `text` on `delimiter`, keeping each delimiter at the end of the page
/// it terminates, so concatenating the pages reproduces `text`.
std::vector<std::string> split_pages(const std::string& text, const std::string& delimiter);

/// Immutable once built; safe to share read-only between threads.
class KnowledgeBase {
public:
    static constexpr int kFormatVersion = 1;

    KnowledgeBase() = default;

    /// Chunks every page. Throws IngestionError on duplicate document ids.
    static KnowledgeBase build(std::vector<Document> documents,
                               std::vector<std::vector<std::string>> pages_per_document,
                               const IngestionConfig& config,
                               std::shared_ptr<const Tokenizer> tokenizer = default_tokenizer());

    const std::vector<Document>& documents() const noexcept { return documents_; }
    const std::vector<Page>& pages() const noexcept { return pages_; }
    const std::vector<Snippet>& snippets() const noexcept { return snippets_; }
    const IngestionConfig& config() const noexcept { return config_; }
    const std::string& tokenizer_name() const noexcept { return tokenizer_name_; }
    bool empty() const noexcept { return snippets_.empty(); }

    const Document* find_document(const std::string& id) const;
    std::optional<std::size_t> page_index(const std::string& doc_id, std::size_t page_no) const;
    /// Half-open range of snippet indices belonging to page `page_idx`.
    std::pair<std::size_t, std::size_t> snippets_of_page(std::size_t page_idx) const;

    void save(const std::filesystem::path& dir) const;
    static KnowledgeBase load(const std::filesystem::path& dir);

    /// Hash over config and content; changes whenever any item text changes.
    std::string fingerprint() const;

private:
    void index_lookups();

    IngestionConfig config_;
    std::string tokenizer_name_;
    std::vector<Document> documents_;
    std::vector<Page> pages_;
    std::vector<Snippet> snippets_;
    std::vector<std::pair<std::size_t, std::size_t>> page_snippets_;
    std::map<std::string, std::size_t> doc_lookup_;
    std::map<std::pair<std::string, std::size_t>, std::size_t> page_lookup_;
};

struct IngestionResult {
    KnowledgeBase kb;
    std::size_t records = 0;
    /// Record-level problems ("line 4: empty text"); the run continues past these.
    std::vector<std::string> errors;
};

/// Reads a JSON-lines manifest, or a directory holding either `manifest.jsonl`
/// or plain `.txt`/`.md` files (one document each, id = file stem).
IngestionResult ingest_documents(const std::filesystem::path& path, const IngestionConfig& config,
                                 std::shared_ptr<const Tokenizer> tokenizer = default_tokenizer());

}  // namespace ragfaith
