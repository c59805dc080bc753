#include <doctest.h>

#include <fstream>

#include "ragfaith/error.hpp"
#include "ragfaith/tokenizer.hpp"
#include "ragfaith/util.hpp"
#include "support.hpp"

using namespace ragfaith;
using testsupport::TempDir;

TEST_CASE("sha256 matches the published test vectors") {
    CHECK(sha256_hex("") == "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
    CHECK(sha256_hex("abc") == "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}

TEST_CASE("fnv1a64 matches the reference offsets") {
    CHECK(fnv1a64("") == 0xcbf29ce484222325ULL);
    CHECK(fnv1a64("a") == 0xaf63dc4c8601ec8cULL);
    CHECK(fnv1a64("foobar") == 0x85944171f73967e8ULL);
}

TEST_CASE("atomic write replaces the file and leaves no temp files") {
    TempDir dir;
    const auto target = dir / "sub/out.txt";
    write_file_atomic(target, "first");
    write_file_atomic(target, "second");
    CHECK(read_file(target) == "second");
    std::size_t entries = 0;
    for (const auto& e : std::filesystem::directory_iterator(target.parent_path())) {
        (void)e;
        ++entries;
    }
    CHECK(entries == 1);
}

TEST_CASE("read_jsonl reports the failing line and skips blank lines") {
    TempDir dir;
    const auto p = dir / "d.jsonl";
    write_file_atomic(p, "{\"a\":1}\n\n{\"a\":2}\n{oops\n");
    try {
        (void)read_jsonl(p);
        FAIL("expected an error");
    } catch (const ValidationError& e) {
        CHECK(std::string(e.what()).find(":4:") != std::string::npos);
    }
    std::vector<std::size_t> bad;
    const auto lines = read_jsonl_lenient(p, [&](std::size_t n, const std::string&) { bad.push_back(n); });
    REQUIRE(lines.size() == 2);
    CHECK(lines[1].line_no == 3);
    CHECK(bad == std::vector<std::size_t>{4});
}

TEST_CASE("string helpers") {
    CHECK(to_lower_ascii("AbC-Ä") == "abc-Ä");
    CHECK(trim("  x y\t\n") == "x y");
    CHECK(format_fixed(66.666, 1) == "66.7");
    CHECK(format_fixed(2.0, 2) == "2.00");
}

TEST_CASE("tokenizer splits words and punctuation") {
    const auto& tok = *default_tokenizer();
    const std::string text = "CO2 levels rose, again!  x_y";
    std::vector<std::string> got;
    for (const auto& t : tok.tokenize(text)) got.push_back(text.substr(t.begin, t.size()));
    CHECK(got == std::vector<std::string>{"CO2", "levels", "rose", ",", "again", "!", "x_y"});
    CHECK(word_tokens(tok, text) == std::vector<std::string>{"co2", "levels", "rose", "again", "x_y"});
    CHECK(tok.tokenize("   ").empty());
    CHECK(tok.tokenize("Müller").size() == 1);
}
