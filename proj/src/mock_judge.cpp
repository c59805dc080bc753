#include "ragfaith/llm.hpp"

#include <algorithm>
#include <cctype>

#include "ragfaith/error.hpp"
#include "ragfaith/prompts.hpp"

namespace ragfaith {

json SamplingSettings::to_json() const {
    json j = {{"temperature", temperature}, {"max_tokens", max_tokens}};
    j["seed"] = seed ? json(*seed) : json(nullptr);
    return j;
}

namespace {

const std::set<std::string>& stopwords() {
    static const std::set<std::string> words = {
        "a",     "an",    "the",  "is",   "are",   "was",  "were", "be",   "been", "being",
        "am",    "of",    "in",   "on",   "at",    "to",   "for",  "by",   "with", "and",
        "or",    "as",    "that", "this", "these", "those", "it",  "its",  "from", "into",
        "than",  "then",  "also", "has",  "have",  "had",  "do",   "does", "did",  "which",
        "who",   "whom",  "whose", "there", "their", "they", "he",  "she",  "his",  "her",
        "s",     "very",  "so",   "such", "can",   "will", "would", "could", "should", "may",
        "might", "must",  "about", "over", "under", "up",  "out",  "if",   "but",  "while"};
    return words;
}

std::string first_line(std::string_view text) {
    return std::string(text.substr(0, text.find('\n')));
}

bool starts_with(std::string_view s, std::string_view prefix) {
    return s.substr(0, prefix.size()) == prefix;
}

std::string strip_suffix(std::string s, std::string_view suffix) {
    if (s.size() >= suffix.size() && s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0) {
        s.erase(s.size() - suffix.size());
    }
    return s;
}

std::string answer_decomposition(const std::string& prompt) {
    constexpr std::string_view kTurn = "\nYOUR TURN\nQuestion: ";
    const std::size_t turn = prompt.rfind(kTurn);
    if (turn == std::string::npos) {
        throw ProviderError("mock judge: malformed claim extraction prompt");
    }
    const std::size_t ans = prompt.find("\nAnswer: ", turn + kTurn.size());
    if (ans == std::string::npos) {
        throw ProviderError("mock judge: claim extraction prompt lacks an answer");
    }
    const std::string answer = strip_suffix(prompt.substr(ans + 9), "\nStatements:");
    json reply = {{"statements", split_sentences(answer)}};
    return reply.dump(4);
}

std::string answer_verification(const std::string& prompt) {
    constexpr std::string_view kTurn = "\nYOUR TURN:\nContext: ";
    constexpr std::string_view kClaims = "\nClaims:\n";
    const std::size_t turn = prompt.rfind(kTurn);
    const std::size_t claims_at = prompt.rfind(kClaims);
    if (turn == std::string::npos || claims_at == std::string::npos || claims_at < turn) {
        throw ProviderError("mock judge: malformed claim verification prompt");
    }
    const std::string context =
        prompt.substr(turn + kTurn.size(), claims_at - turn - kTurn.size());
    const std::string block =
        strip_suffix(prompt.substr(claims_at + kClaims.size()), "\nAnalysis:");

    // "N. claim" starts an item; other lines continue the previous claim.
    std::vector<std::string> claims;
    std::size_t pos = 0;
    while (pos <= block.size()) {
        std::size_t nl = block.find('\n', pos);
        if (nl == std::string::npos) nl = block.size();
        const std::string line = block.substr(pos, nl - pos);
        std::size_t d = 0;
        while (d < line.size() && std::isdigit(static_cast<unsigned char>(line[d]))) ++d;
        if (d > 0 && line.compare(d, 2, ". ") == 0) {
            claims.push_back(line.substr(d + 2));
        } else if (!claims.empty()) {
            claims.back() += "\n" + line;
        }
        if (nl == block.size()) break;
        pos = nl + 1;
    }

    std::set<std::string> all_context;
    for (auto& w : word_tokens(*default_tokenizer(), context)) all_context.insert(std::move(w));
    json analysis = json::array();
    for (const auto& claim : claims) {
        std::vector<std::string> missing;
        for (const auto& t : content_tokens(claim)) {
            if (!all_context.count(t)) missing.push_back(t);
        }
        std::string reason;
        if (missing.empty()) {
            reason = "All content words of the claim appear in the context.";
        } else {
            reason = "Not found in the context:";
            for (std::size_t i = 0; i < missing.size(); ++i) {
                reason += (i == 0 ? " " : ", ") + missing[i];
            }
            reason += ".";
        }
        analysis.push_back(
            {{"claim", claim}, {"reason", reason}, {"verdict", missing.empty() ? 1 : 0}});
    }
    return json{{"analysis", analysis}}.dump(4);
}

std::string answer_rag(const std::string& prompt) {
    const std::size_t start = prompt.find("\nContext:\n[[0]] ");
    if (start == std::string::npos) {
        return "The provided contexts do not contain the answer.";
    }
    const std::size_t content = prompt.find('\n', start + 10);
    std::size_t end = prompt.find("\n[[1]] ", content);
    if (end == std::string::npos) end = prompt.rfind("\n\nQuestion:\n");
    const auto sentences = split_sentences(prompt.substr(content + 1, end - content - 1));
    if (sentences.empty()) {
        return "The provided contexts do not contain the answer.";
    }
    return sentences.front();
}

}  // namespace

std::set<std::string> content_tokens(const std::string& text, const Tokenizer& tokenizer) {
    std::set<std::string> out;
    for (auto& w : word_tokens(tokenizer, text)) {
        if (!stopwords().count(w)) out.insert(std::move(w));
    }
    return out;
}

std::vector<std::string> split_sentences(const std::string& text) {
    std::vector<std::string> out;
    std::string current;
    auto flush = [&] {
        std::string s = trim(current);
        if (!s.empty()) out.push_back(std::move(s));
        current.clear();
    };
    for (std::size_t i = 0; i < text.size(); ++i) {
        const char c = text[i];
        if (std::isspace(static_cast<unsigned char>(c))) {
            if (!current.empty() && current.back() != ' ') current += ' ';
            continue;
        }
        current += c;
        if ((c == '.' || c == '!' || c == '?') &&
            (i + 1 == text.size() || std::isspace(static_cast<unsigned char>(text[i + 1])))) {
            flush();
        }
    }
    flush();
    return out;
}

bool mock_supported(const std::string& claim, const std::string& context) {
    std::set<std::string> all_context;
    for (auto& w : word_tokens(*default_tokenizer(), context)) all_context.insert(std::move(w));
    const auto needed = content_tokens(claim);
    return std::all_of(needed.begin(), needed.end(),
                       [&](const std::string& t) { return all_context.count(t) > 0; });
}

std::string MockJudgeProvider::complete(const std::string& prompt, const SamplingSettings&) {
    if (starts_with(prompt, first_line(claim_extraction_template().text))) {
        return answer_decomposition(prompt);
    }
    if (starts_with(prompt, first_line(claim_verification_template().text))) {
        return answer_verification(prompt);
    }
    if (starts_with(prompt, first_line(rag_answer_template().text))) {
        return answer_rag(prompt);
    }
    throw ProviderError("mock judge: unrecognized prompt");
}

}  // namespace ragfaith
