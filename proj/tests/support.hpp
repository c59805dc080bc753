#pragma once

#include <algorithm>
#include <atomic>
#include <cstdint>
#include <deque>
#include <filesystem>
#include <functional>
#include <mutex>
#include <random>
#include <span>
#include <string>
#include <tuple>
#include <vector>

#include "ragfaith/corpus.hpp"
#include "ragfaith/embedding.hpp"
#include "ragfaith/retrieval.hpp"
#include "ragfaith/vector_index.hpp"
#include "ragfaith/error.hpp"
#include "ragfaith/llm.hpp"
#include "ragfaith/util.hpp"

namespace testsupport {

inline std::filesystem::path data_dir() { return RAGFAITH_TEST_DATA_DIR; }

/// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
public:
    explicit TempDir(const std::string& tag = "t") {
        static std::atomic<int> counter{0};
        std::random_device rd;
        path_ = std::filesystem::temp_directory_path() /
                ("ragfaith-" + tag + "-" + std::to_string(rd()) + "-" +
                 std::to_string(counter.fetch_add(1)));
        std::filesystem::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    const std::filesystem::path& path() const { return path_; }
    std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

private:
    std::filesystem::path path_;
};

/// Replies from a queue; an empty queue falls back to `fallback` or throws.
class ScriptedLLM final : public ragfaith::LLMProvider {
public:
    explicit ScriptedLLM(std::vector<std::string> replies = {},
                         std::function<std::string(const std::string&)> fallback = {})
        : replies_(replies.begin(), replies.end()), fallback_(std::move(fallback)) {}

    std::string complete(const std::string& prompt, const ragfaith::SamplingSettings&) override {
        std::lock_guard lock(mu_);
        prompts.push_back(prompt);
        if (!replies_.empty()) {
            std::string r = replies_.front();
            replies_.pop_front();
            if (r == "!provider-error") throw ragfaith::ProviderError("scripted failure");
            return r;
        }
        if (fallback_) return fallback_(prompt);
        throw ragfaith::ProviderError("script exhausted");
    }
    std::string model_id() const override { return "scripted"; }

    std::vector<std::string> prompts;

private:
    std::mutex mu_;
    std::deque<std::string> replies_;
    std::function<std::string(const std::string&)> fallback_;
};

/// Fixed vectors per text, for exact control over retrieval scores.
class TableEmbedder final : public ragfaith::EmbeddingProvider {
public:
    explicit TableEmbedder(std::function<ragfaith::Embedding(const std::string&)> fn)
        : fn_(std::move(fn)) {}
    std::vector<ragfaith::Embedding> embed(std::span<const std::string> texts) override {
        ++calls;
        std::vector<ragfaith::Embedding> out;
        for (const auto& t : texts) out.push_back(fn_(t));
        return out;
    }
    std::string model_id() const override { return "table"; }

    std::atomic<int> calls{0};

private:
    std::function<ragfaith::Embedding(const std::string&)> fn_;
};

inline std::string random_word(std::mt19937_64& rng, std::size_t vocabulary = 40) {
    static const char* syllables[] = {"ka", "lo", "mi", "ne", "ru", "sa", "te", "vo"};
    std::uniform_int_distribution<std::size_t> pick(0, vocabulary - 1);
    std::size_t id = pick(rng);
    std::string w;
    do {
        w += syllables[id % 8];
        id /= 8;
    } while (id > 0);
    return w;
}

inline std::string random_text(std::mt19937_64& rng, std::size_t n_words,
                               std::size_t vocabulary = 40) {
    std::string s;
    for (std::size_t i = 0; i < n_words; ++i) {
        if (i > 0) s += ' ';
        s += random_word(rng, vocabulary);
    }
    return s;
}

inline std::size_t count_provider_lines(const std::filesystem::path& ledger) {
    if (!std::filesystem::exists(ledger)) return 0;
    std::size_t n = 0;
    for (const auto& line : ragfaith::read_jsonl(ledger)) {
        if (line.value.value("source", "") == "provider") ++n;
    }
    return n;
}

/// Window spans by testing every token position for being a window start.
inline std::vector<ragfaith::TokenSpan> brute_force_windows(std::size_t n, std::size_t window,
                                                            std::size_t stride) {
    std::vector<ragfaith::TokenSpan> out;
    for (std::size_t pos = 0; pos < n; ++pos) {
        if (pos % stride == 0) out.push_back({pos, std::min(window, n - pos)});
    }
    return out;
}

/// Up to `max_pages` pages and `max_snippets` snippets over a small vocabulary,
/// with repeated pages so that exact score ties occur.
inline ragfaith::KnowledgeBase random_kb(std::mt19937_64& rng, std::size_t max_pages = 20,
                                         std::size_t max_snippets = 200) {
    using namespace ragfaith;
    IngestionConfig cfg;
    cfg.window = std::uniform_int_distribution<std::size_t>(3, 12)(rng);
    const std::size_t n_pages = std::uniform_int_distribution<std::size_t>(1, max_pages)(rng);
    const std::size_t per_page_cap = std::max<std::size_t>(1, max_snippets / n_pages);
    std::vector<Document> docs;
    std::vector<std::vector<std::string>> pages;
    std::vector<std::string> previous;
    std::size_t made = 0;
    while (made < n_pages) {
        const std::size_t in_doc =
            std::min(n_pages - made, std::uniform_int_distribution<std::size_t>(1, 4)(rng));
        Document d;
        d.id = "doc" + std::to_string(docs.size());
        d.title = "T" + std::to_string(docs.size());
        std::vector<std::string> doc_pages;
        for (std::size_t i = 0; i < in_doc; ++i) {
            std::string text;
            if (!previous.empty() && std::uniform_int_distribution<int>(0, 4)(rng) == 0) {
                text = previous[std::uniform_int_distribution<std::size_t>(0, previous.size() - 1)(rng)];
            } else {
                const std::size_t words = std::uniform_int_distribution<std::size_t>(
                    1, cfg.window * per_page_cap)(rng);
                text = random_text(rng, words, 30);
            }
            previous.push_back(text);
            doc_pages.push_back(text);
            d.text += text;
        }
        docs.push_back(std::move(d));
        pages.push_back(std::move(doc_pages));
        made += in_doc;
    }
    return KnowledgeBase::build(std::move(docs), std::move(pages), cfg);
}

/// Reference ranking: score every page, keep the best `top_pages` by
/// (score desc, doc asc, page asc), then rank every snippet of those pages.
inline std::vector<ragfaith::SnippetRef> brute_force_rank(
    std::span<const float> q, const ragfaith::KnowledgeBase& kb, const ragfaith::VectorIndex& pages,
    const ragfaith::VectorIndex& snippets, std::size_t top_pages, std::size_t top_snippets,
    ragfaith::PageScoring scoring) {
    using namespace ragfaith;
    auto score = [&](std::span<const float> v) {
        double acc = 0.0;
        for (std::size_t i = 0; i < v.size(); ++i) acc += static_cast<double>(q[i]) * v[i];
        return acc;
    };
    struct Row {
        double score;
        std::string doc;
        std::size_t page;
        std::size_t idx;
    };
    std::vector<Row> page_rows;
    for (std::size_t p = 0; p < kb.pages().size(); ++p) {
        std::vector<std::size_t> own;
        for (std::size_t s = 0; s < kb.snippets().size(); ++s) {
            if (kb.snippets()[s].doc_id == kb.pages()[p].doc_id &&
                kb.snippets()[s].page_no == kb.pages()[p].page_no) {
                own.push_back(s);
            }
        }
        if (own.empty()) continue;
        double sc = -2.0;
        if (scoring == PageScoring::embed_page) {
            sc = score(pages.vector(p));
        } else {
            for (std::size_t s : own) sc = std::max(sc, score(snippets.vector(s)));
        }
        page_rows.push_back({sc, kb.pages()[p].doc_id, kb.pages()[p].page_no, p});
    }
    std::sort(page_rows.begin(), page_rows.end(), [](const Row& a, const Row& b) {
        return std::tie(b.score, a.doc, a.page) < std::tie(a.score, b.doc, b.page);
    });
    if (page_rows.size() > top_pages) page_rows.resize(top_pages);
    struct Cand {
        double score;
        SnippetRef ref;
    };
    std::vector<Cand> cands;
    for (std::size_t s = 0; s < kb.snippets().size(); ++s) {
        for (const auto& r : page_rows) {
            if (kb.snippets()[s].doc_id == r.doc && kb.snippets()[s].page_no == r.page) {
                cands.push_back({score(snippets.vector(s)), kb.snippets()[s].ref()});
            }
        }
    }
    std::sort(cands.begin(), cands.end(), [](const Cand& a, const Cand& b) {
        if (a.score != b.score) return a.score > b.score;
        return a.ref < b.ref;
    });
    std::vector<SnippetRef> out;
    for (std::size_t i = 0; i < std::min(top_snippets, cands.size()); ++i) out.push_back(cands[i].ref);
    return out;
}

}  // namespace testsupport
