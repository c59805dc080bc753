#pragma once

#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace ragfaith {

enum class TemplateId { claim_extraction, claim_verification, rag_answer };

std::string to_string(TemplateId id);

struct PromptTemplate {
    TemplateId id;
    std::string_view text;
};

const PromptTemplate& claim_extraction_template();
const PromptTemplate& claim_verification_template();
const PromptTemplate& rag_answer_template();

/// Single left-to-right pass over `text`, replacing each `{{name}}` with its
/// binding. Bound values are copied verbatim and never re-scanned. Throws
/// ValidationError for a placeholder without a binding.
std::string render_template(std::string_view text,
                            const std::map<std::string, std::string>& bindings);

struct RagPassage {
    std::string title;
    std::optional<int> year;
    std::string content;
};

/// Year text used in prompts and evidence headers; "n.d." when unknown.
std::string year_or_nd(const std::optional<int>& year);

std::string render_claim_extraction_prompt(const std::string& question, const std::string& answer);

/// Claims are numbered "1. ...", one per line, in order.
std::string render_claim_verification_prompt(const std::string& context,
                                             const std::vector<std::string>& claims);

/// Passages become `[[i]] "title", year` + content blocks, i from 0.
std::string render_rag_prompt(const std::string& question, const std::vector<RagPassage>& passages);

}  // namespace ragfaith
