#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "ragfaith/util.hpp"

namespace ragfaith {

struct Verdict {
    std::string claim;
    std::string reason;
    int verdict = 0;  // 0 or 1
};

/// Removes Markdown code-fence marker lines (```` ``` ```` with optional
/// language tag), keeping the fenced content.
std::string strip_code_fences(std::string_view raw);

/// The first balanced top-level JSON value starting with `open` ('{' or '['),
/// honoring string literals and escapes; nullopt when none parses.
std::optional<json> extract_first_json(std::string_view text, char open = '{');

/// Personal pronouns rejected at the start of a claim.
const std::vector<std::string>& default_leading_pronouns();

/// Claim strings in reply order. Throws ParseError when no JSON object with a
/// "statements" array of non-empty strings is found, or when a statement
/// starts with one of `leading_pronouns` (case-insensitive).
std::vector<std::string> parse_claim_extraction(
    std::string_view raw, const std::vector<std::string>& leading_pronouns = {});

/// Maps a reply "verdict" field to 0/1. Accepted: integers 0/1, floats 0.0/1.0,
/// booleans, and the strings "0"/"1" (surrounding whitespace ignored). Anything
/// else throws ParseError.
int coerce_verdict(const json& value, std::string_view raw);

/// Exactly `expected` verdicts in reply order. Throws CountMismatchError on a
/// different count and ParseError on any structural problem.
std::vector<Verdict> parse_claim_verification(std::string_view raw, std::size_t expected);

}  // namespace ragfaith
