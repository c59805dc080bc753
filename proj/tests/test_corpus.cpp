#include <doctest.h>

#include <random>
#include <set>

#include "ragfaith/corpus.hpp"
#include "ragfaith/error.hpp"
#include "support.hpp"

using namespace ragfaith;
using testsupport::TempDir;

namespace {

std::string numbered_tokens(std::size_t n) {
    std::string s;
    for (std::size_t i = 0; i < n; ++i) {
        if (i > 0) s += ' ';
        s += "t" + std::to_string(i);
    }
    return s;
}

std::vector<std::size_t> starts(const std::vector<TokenSpan>& spans) {
    std::vector<std::size_t> out;
    for (const auto& s : spans) out.push_back(s.start);
    return out;
}

std::vector<std::size_t> lengths(const std::vector<Snippet>& snippets) {
    std::vector<std::size_t> out;
    for (const auto& s : snippets) out.push_back(s.span.length);
    return out;
}

}  // namespace

TEST_CASE("window enumeration") {
    SUBCASE("page shorter than the window") {
        const auto spans = window_spans(10, 115, 115);
        REQUIRE(spans.size() == 1);
        CHECK(spans[0] == TokenSpan{0, 10});
    }
    SUBCASE("231 tokens leave a one-token tail") {
        const auto spans = window_spans(231, 115, 115);
        REQUIRE(spans.size() == 3);
        CHECK(spans[0].length == 115);
        CHECK(spans[1].length == 115);
        CHECK(spans[2] == TokenSpan{230, 1});
    }
    SUBCASE("exact multiple") { CHECK(window_spans(230, 115, 115).size() == 2); }
    SUBCASE("overlapping stride") {
        const auto spans = window_spans(300, 115, 58);
        CHECK(starts(spans) == std::vector<std::size_t>{0, 58, 116, 174, 232, 290});
    }
    SUBCASE("empty page") { CHECK(window_spans(0, 115, 115).empty()); }
    SUBCASE("invalid arguments") {
        CHECK_THROWS_AS(window_spans(10, 0, 1), ValidationError);
        CHECK_THROWS_AS(window_spans(10, 5, 0), ValidationError);
        CHECK_THROWS_AS(window_spans(10, 5, 6), ValidationError);
    }
}

TEST_CASE("chunk_page keeps the original text of each window") {
    const Page page{"d", 0, "alpha, beta gamma.\ndelta"};
    const auto snippets = chunk_page(page, *default_tokenizer(), 3, 3);
    REQUIRE(snippets.size() == 2);
    CHECK(snippets[0].text == "alpha, beta");
    CHECK(snippets[1].text == "gamma.\ndelta");
    CHECK(snippets[1].snippet_no == 1);
    CHECK(lengths(chunk_page({"d", 0, numbered_tokens(231)}, *default_tokenizer(), 115, 115)) ==
          std::vector<std::size_t>{115, 115, 1});
}

TEST_CASE("property: windows cover every token, respect the bound, and are ordered") {
    std::mt19937_64 rng(7);
    for (int trial = 0; trial < 300; ++trial) {
        const std::size_t n = std::uniform_int_distribution<std::size_t>(0, 700)(rng);
        const std::size_t window = std::uniform_int_distribution<std::size_t>(1, 150)(rng);
        const std::size_t stride = std::uniform_int_distribution<std::size_t>(1, window)(rng);
        const auto spans = window_spans(n, window, stride);
        std::vector<int> covered(n, 0);
        for (std::size_t i = 0; i < spans.size(); ++i) {
            REQUIRE(spans[i].start == i * stride);
            REQUIRE(spans[i].length >= 1);
            REQUIRE(spans[i].length <= window);
            REQUIRE(spans[i].start + spans[i].length <= n);
            for (std::size_t t = spans[i].start; t < spans[i].start + spans[i].length; ++t) {
                covered[t] = 1;
            }
            if (i + 1 < spans.size() && stride == window) {
                REQUIRE(spans[i].start + spans[i].length == i * stride + stride);
            }
        }
        for (int c : covered) REQUIRE(c == 1);
    }
}

TEST_CASE("split_pages round-trips the document") {
    CHECK(split_pages("a\fb\f", "\f") == std::vector<std::string>{"a\f", "b\f"});
    CHECK(split_pages("a\fb", "\f") == std::vector<std::string>{"a\f", "b"});
    CHECK(split_pages("abc", "") == std::vector<std::string>{"abc"});
    std::mt19937_64 rng(3);
    for (int i = 0; i < 100; ++i) {
        std::string text;
        const int n = std::uniform_int_distribution<int>(0, 30)(rng);
        for (int k = 0; k < n; ++k) text += "ab\f<>"[std::uniform_int_distribution<int>(0, 4)(rng)];
        std::string joined;
        for (const auto& p : split_pages(text, "<>")) joined += p;
        CHECK(joined == text);
    }
}

namespace {

KnowledgeBase three_doc_kb(std::size_t tokens_per_doc = 115) {
    std::vector<Document> docs;
    std::vector<std::vector<std::string>> pages;
    for (int i = 0; i < 3; ++i) {
        docs.push_back({"doc" + std::to_string(i), "Title " + std::to_string(i), 2000 + i, "test",
                        numbered_tokens(tokens_per_doc)});
        pages.push_back({docs.back().text});
    }
    return KnowledgeBase::build(docs, pages, IngestionConfig{});
}

}  // namespace

TEST_CASE("knowledge base counts and lookups") {
    const auto kb = three_doc_kb();
    CHECK(kb.documents().size() == 3);
    CHECK(kb.pages().size() == 3);
    CHECK(kb.snippets().size() == 3);
    REQUIRE(kb.find_document("doc1") != nullptr);
    CHECK(kb.find_document("doc1")->year == 2001);
    CHECK(kb.find_document("nope") == nullptr);
    CHECK(kb.page_index("doc2", 0) == 2u);
    CHECK_FALSE(kb.page_index("doc2", 1).has_value());
    CHECK(kb.snippets_of_page(1) == std::pair<std::size_t, std::size_t>{1, 2});
}

TEST_CASE("duplicate document ids are rejected") {
    std::vector<Document> docs{{"a", "A", std::nullopt, "", "x"}, {"a", "B", std::nullopt, "", "y"}};
    CHECK_THROWS_AS(KnowledgeBase::build(docs, {{"x"}, {"y"}}, IngestionConfig{}), IngestionError);
}

TEST_CASE("save and load reproduce the knowledge base byte for byte") {
    TempDir dir;
    const auto kb = three_doc_kb(250);
    kb.save(dir / "kb1");
    const auto loaded = KnowledgeBase::load(dir / "kb1");
    CHECK(loaded.fingerprint() == kb.fingerprint());
    CHECK(loaded.snippets().size() == kb.snippets().size());
    loaded.save(dir / "kb2");
    for (const char* f : {"kb.json", "documents.jsonl", "pages.jsonl", "snippets.jsonl"}) {
        CHECK(read_file(dir / "kb1" / f) == read_file(dir / "kb2" / f));
    }
}

TEST_CASE("fingerprint tracks content and config") {
    const auto a = three_doc_kb(115);
    const auto b = three_doc_kb(116);
    CHECK(a.fingerprint() == three_doc_kb(115).fingerprint());
    CHECK(a.fingerprint() != b.fingerprint());
}

TEST_CASE("ingest a manifest with pre-split pages, delimiters and bad records") {
    TempDir dir;
    const auto manifest = dir / "m.jsonl";
    write_file_atomic(manifest,
                      "{\"id\":\"p\",\"title\":\"Paged\",\"year\":2020,\"pages\":[\"one two\",\"three\"]}\n"
                      "{\"id\":\"f\",\"title\":\"Feed\",\"text\":\"a b\\fc d\"}\n"
                      "{\"id\":\"e\",\"title\":\"Empty\",\"text\":\"   \"}\n"
                      "{\"id\":\"n\",\"text\":\"no title\"}\n");
    const auto result = ingest_documents(manifest, IngestionConfig{});
    CHECK(result.records == 4);
    CHECK(result.errors.size() == 2);
    CHECK(result.kb.documents().size() == 2);
    CHECK(result.kb.pages().size() == 4);
    CHECK(result.kb.pages()[1].page_no == 1);
    CHECK(result.kb.pages()[2].text == "a b\f");

    write_file_atomic(manifest, "{\"id\":\"x\",\"title\":\"X\",\"text\":\"a\"}\n"
                                "{\"id\":\"x\",\"title\":\"Y\",\"text\":\"b\"}\n");
    try {
        (void)ingest_documents(manifest, IngestionConfig{});
        FAIL("duplicate id accepted");
    } catch (const IngestionError& e) {
        CHECK(std::string(e.what()).find("x") != std::string::npos);
    }
}

TEST_CASE("ingest a directory of text files") {
    TempDir dir;
    write_file_atomic(dir / "b.txt", "second document");
    write_file_atomic(dir / "a.md", "first document");
    write_file_atomic(dir / "skip.pdf", "ignored");
    const auto result = ingest_documents(dir.path(), IngestionConfig{});
    REQUIRE(result.kb.documents().size() == 2);
    CHECK(result.kb.documents()[0].id == "a");
    CHECK(result.kb.documents()[1].id == "b");
    CHECK_THROWS_AS(ingest_documents(dir / "missing", IngestionConfig{}), IngestionError);
}

TEST_CASE("ingestion is deterministic") {
    TempDir dir;
    std::mt19937_64 rng(11);
    std::string lines;
    for (int i = 0; i < 5; ++i) {
        lines += json{{"id", "d" + std::to_string(i)}, {"title", "T"},
                      {"text", testsupport::random_text(rng, 300)}}
                     .dump() +
                 "\n";
    }
    write_file_atomic(dir / "m.jsonl", lines);
    IngestionConfig cfg;
    cfg.window = 50;
    cfg.stride = 20;
    ingest_documents(dir / "m.jsonl", cfg).kb.save(dir / "k1");
    ingest_documents(dir / "m.jsonl", cfg).kb.save(dir / "k2");
    CHECK(read_file(dir / "k1/snippets.jsonl") == read_file(dir / "k2/snippets.jsonl"));
    CHECK(read_file(dir / "k1/kb.json") == read_file(dir / "k2/kb.json"));
}
