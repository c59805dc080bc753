#include "ragfaith/judge_parse.hpp"

#include <cctype>
#include <cmath>

#include "ragfaith/error.hpp"

namespace ragfaith {

std::string strip_code_fences(std::string_view raw) {
    std::string out;
    std::size_t pos = 0;
    while (pos <= raw.size()) {
        std::size_t nl = raw.find('\n', pos);
        const bool last = nl == std::string_view::npos;
        if (last) nl = raw.size();
        std::string_view line = raw.substr(pos, nl - pos);
        const std::string t = trim(line);
        if (t.rfind("```", 0) == 0) {
            // Keep anything that follows a closing fence on the same line.
            std::string rest = t.substr(3);
            const bool tag_only =
                rest.find_first_of(" {[\"") == std::string::npos;  // e.g. "json"
            if (!tag_only) {
                out += rest;
                out += '\n';
            }
        } else {
            out += line;
            if (!last) out += '\n';
        }
        if (last) break;
        pos = nl + 1;
    }
    return out;
}

std::optional<json> extract_first_json(std::string_view text, char open) {
    const char close = open == '{' ? '}' : ']';
    std::size_t start = text.find(open);
    while (start != std::string_view::npos) {
        int depth = 0;
        bool in_string = false;
        bool escaped = false;
        std::size_t end = std::string_view::npos;
        for (std::size_t i = start; i < text.size(); ++i) {
            const char c = text[i];
            if (in_string) {
                if (escaped) {
                    escaped = false;
                } else if (c == '\\') {
                    escaped = true;
                } else if (c == '"') {
                    in_string = false;
                }
                continue;
            }
            if (c == '"') {
                in_string = true;
            } else if (c == '{' || c == '[') {
                ++depth;
            } else if (c == '}' || c == ']') {
                --depth;
                if (depth == 0) {
                    if (c == close) end = i;
                    break;
                }
            }
        }
        if (end != std::string_view::npos) {
            try {
                return json::parse(text.substr(start, end - start + 1));
            } catch (const json::parse_error&) {
                // try the next candidate
            }
        }
        start = text.find(open, start + 1);
    }
    return std::nullopt;
}

const std::vector<std::string>& default_leading_pronouns() {
    static const std::vector<std::string> list = {"he",   "she", "it",  "they",  "him",
                                                  "her",  "them", "his", "hers", "its",
                                                  "their", "theirs"};
    return list;
}

namespace {

std::string first_word_lower(const std::string& s) {
    std::size_t i = 0;
    while (i < s.size() && !std::isalpha(static_cast<unsigned char>(s[i]))) ++i;
    std::size_t j = i;
    while (j < s.size() && (std::isalpha(static_cast<unsigned char>(s[j])) || s[j] == '\'')) ++j;
    return to_lower_ascii(s.substr(i, j - i));
}

}  // namespace

std::vector<std::string> parse_claim_extraction(std::string_view raw,
                                                const std::vector<std::string>& leading_pronouns) {
    const std::string text = strip_code_fences(raw);
    const auto obj = extract_first_json(text, '{');
    if (!obj) {
        throw ParseError("no JSON object in claim extraction reply", std::string(raw));
    }
    if (!obj->is_object() || !obj->contains("statements") || !(*obj)["statements"].is_array()) {
        throw ParseError("claim extraction reply lacks a \"statements\" array", std::string(raw));
    }
    std::vector<std::string> claims;
    for (const auto& s : (*obj)["statements"]) {
        if (!s.is_string()) {
            throw ParseError("non-string entry in \"statements\"", std::string(raw));
        }
        std::string claim = trim(s.get<std::string>());
        if (claim.empty()) {
            throw ParseError("empty statement in claim extraction reply", std::string(raw));
        }
        const std::string first = first_word_lower(claim);
        for (const auto& p : leading_pronouns) {
            if (first == p) {
                throw ParseError("statement starts with pronoun \"" + p + "\": " + claim,
                                 std::string(raw));
            }
        }
        claims.push_back(std::move(claim));
    }
    return claims;
}

int coerce_verdict(const json& value, std::string_view raw) {
    if (value.is_boolean()) {
        return value.get<bool>() ? 1 : 0;
    }
    if (value.is_number_integer() || value.is_number_unsigned()) {
        const auto v = value.get<long long>();
        if (v == 0 || v == 1) return static_cast<int>(v);
    } else if (value.is_number_float()) {
        const double v = value.get<double>();
        if (v == 0.0 || v == 1.0) return static_cast<int>(v);
    } else if (value.is_string()) {
        const std::string s = trim(value.get<std::string>());
        if (s == "0") return 0;
        if (s == "1") return 1;
    }
    throw ParseError("verdict outside {0,1}: " + value.dump(), std::string(raw));
}

std::vector<Verdict> parse_claim_verification(std::string_view raw, std::size_t expected) {
    const std::string text = strip_code_fences(raw);
    const std::size_t brace = text.find('{');
    const std::size_t bracket = text.find('[');

    json items;
    if (bracket != std::string::npos && (brace == std::string::npos || bracket < brace)) {
        // A bare array of analysis items.
        auto arr = extract_first_json(text, '[');
        if (!arr) {
            throw ParseError("no JSON value in claim verification reply", std::string(raw));
        }
        items = std::move(*arr);
    } else {
        auto obj = extract_first_json(text, '{');
        if (!obj) {
            throw ParseError("no JSON object in claim verification reply", std::string(raw));
        }
        if (!obj->is_object() || !obj->contains("analysis")) {
            throw ParseError("claim verification reply lacks \"analysis\"", std::string(raw));
        }
        items = (*obj)["analysis"];
    }
    if (!items.is_array()) {
        throw ParseError("\"analysis\" is not an array", std::string(raw));
    }
    if (items.size() != expected) {
        throw CountMismatchError(expected, items.size(), std::string(raw));
    }
    std::vector<Verdict> out;
    out.reserve(items.size());
    for (const auto& item : items) {
        if (!item.is_object() || !item.contains("verdict")) {
            throw ParseError("analysis item without \"verdict\"", std::string(raw));
        }
        Verdict v;
        if (item.contains("claim") && item["claim"].is_string()) v.claim = item["claim"];
        if (item.contains("reason") && item["reason"].is_string()) v.reason = item["reason"];
        v.verdict = coerce_verdict(item["verdict"], raw);
        out.push_back(std::move(v));
    }
    return out;
}

}  // namespace ragfaith
