#pragma once

#include <cstddef>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

namespace ragfaith {

/// A token as a byte range [begin, end) into the source text.
struct Token {
    std::size_t begin = 0;
    std::size_t end = 0;

    std::size_t size() const noexcept { return end - begin; }
    bool operator==(const Token&) const = default;
};

class Tokenizer {
public:
    virtual ~Tokenizer() = default;

    virtual std::vector<Token> tokenize(std::string_view text) const = 0;

    /// Identifier echoed into knowledge-base metadata.
    virtual std::string name() const = 0;
};

/// Word tokens are maximal runs of ASCII alphanumerics, '_' or non-ASCII
/// bytes; every other non-space character is a single-character token.
/// Whitespace separates tokens and is never part of one.
class WhitespacePunctTokenizer final : public Tokenizer {
public:
    std::vector<Token> tokenize(std::string_view text) const override;
    std::string name() const override { return "whitespace-punct-v1"; }
};

/// True when the token's first byte is a word character (not punctuation).
bool is_word_token(std::string_view text, const Token& token) noexcept;

/// Lowercased word tokens of `text`; punctuation tokens are dropped.
std::vector<std::string> word_tokens(const Tokenizer& tokenizer, std::string_view text);

/// The text of tokens [start, start+length) as a substring of `text`.
std::string_view token_span_text(std::string_view text, const std::vector<Token>& tokens,
                                 std::size_t start, std::size_t length);

std::shared_ptr<const Tokenizer> default_tokenizer();

}  // namespace ragfaith
