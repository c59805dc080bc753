#include "ragfaith/tokenizer.hpp"

#include <cctype>

#include "ragfaith/util.hpp"

namespace ragfaith {

namespace {

bool is_word_byte(unsigned char c) noexcept {
    return c >= 0x80 || std::isalnum(c) != 0 || c == '_';
}

bool is_space_byte(unsigned char c) noexcept {
    return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v';
}

}  // namespace

std::vector<Token> WhitespacePunctTokenizer::tokenize(std::string_view text) const {
    std::vector<Token> tokens;
    std::size_t i = 0;
    const std::size_t n = text.size();
    while (i < n) {
        const auto c = static_cast<unsigned char>(text[i]);
        if (is_space_byte(c)) {
            ++i;
        } else if (is_word_byte(c)) {
            std::size_t j = i + 1;
            while (j < n && is_word_byte(static_cast<unsigned char>(text[j]))) ++j;
            tokens.push_back({i, j});
            i = j;
        } else {
            tokens.push_back({i, i + 1});
            ++i;
        }
    }
    return tokens;
}

bool is_word_token(std::string_view text, const Token& token) noexcept {
    return token.size() > 0 && is_word_byte(static_cast<unsigned char>(text[token.begin]));
}

std::vector<std::string> word_tokens(const Tokenizer& tokenizer, std::string_view text) {
    std::vector<std::string> out;
    for (const Token& t : tokenizer.tokenize(text)) {
        if (is_word_token(text, t)) {
            out.push_back(to_lower_ascii(text.substr(t.begin, t.size())));
        }
    }
    return out;
}

std::string_view token_span_text(std::string_view text, const std::vector<Token>& tokens,
                                 std::size_t start, std::size_t length) {
    if (length == 0 || start >= tokens.size()) {
        return {};
    }
    const std::size_t last = std::min(tokens.size(), start + length) - 1;
    const std::size_t b = tokens[start].begin;
    return text.substr(b, tokens[last].end - b);
}

std::shared_ptr<const Tokenizer> default_tokenizer() {
    static const auto instance = std::make_shared<const WhitespacePunctTokenizer>();
    return instance;
}

}  // namespace ragfaith
