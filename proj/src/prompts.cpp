#include "ragfaith/prompts.hpp"

#include "ragfaith/error.hpp"
#include "ragfaith/util.hpp"

namespace ragfaith {

namespace {

// Line breaks and trailing spaces are part of the template.
constexpr std::string_view kClaimExtraction =
    R"(Given a question, an answer, and sentences from the answer, analyze the complexity of 
each sentence and break it down into one or more fully understandable statements.
Ensure that no pronouns are used in each statement and that every claim is explicit 
and self-contained. Format the output as a structured JSON response.

EXAMPLE
Question: Who was Albert Einstein and what is he best known for?
Answer: He was a German-born theoretical physicist, widely acknowledged to be one of 
the greatest and most influential physicists of all time. He was best known for 
developing the theory of relativity. He also made important contributions to the 
development of quantum mechanics.
Statements:
{
    "statements": [
        "Albert Einstein was a German-born theoretical physicist.",
        "Albert Einstein is recognized as one of the greatest and most influential physicists of all time.",
        "Albert Einstein was best known for developing the theory of relativity.",
        "Albert Einstein also made important contributions to the development of quantum mechanics."
    ]
}

YOUR TURN
Question: {{question}}
Answer: {{sentences}}
Statements:)";

constexpr std::string_view kClaimVerification =
    R"(Your task is to judge the faithfulness of a series of claims based on a given context. For each claim you must return verdict as 1 if the claim can be directly inferred based on the context or 0 if the claim can not be directly inferred based on the context.

EXAMPLE 1:
Context: John is a student at XYZ University. He is pursuing a degree in Computer Science. He is enrolled in several courses this semester, including Data Structures, Algorithms, and Database Management. John is a diligent student and spends a significant amount of time studying and completing assignments. He often stays late in the library to work on his projects.

Claims:
1. John is majoring in Biology.
2. John is taking a course on Artificial Intelligence.
3. John is a dedicated student.
4. John has a part-time job.

Analysis:
{"analysis": [
{
    "claim": "John is majoring in Biology.",
    "reason": "John's major is explicitly mentioned as Computer Science. There is no information suggesting he is majoring in Biology.",
    "verdict": 0
},
{
    "claim": "John is taking a course on Artificial Intelligence.",
    "reason": "The context mentions the courses John is currently enrolled in, and Artificial Intelligence is not mentioned. Therefore, it cannot be deduced that John is taking a course on AI.",
    "verdict": 0
},
{
    "claim": "John is a dedicated student.",
    "reason": "The context states that he spends a significant amount of time studying and completing assignments. Additionally, it mentions that he often stays late in the library to work on his projects, which implies dedication.",
    "verdict": 1
},
{
    "claim": "John has a part-time job.",
    "reason": "There is no information given in the context about John having a part-time job.",
    "verdict": 0
}
]}

EXAMPLE 2:
Context: Photosynthesis is a process used by plants, algae, and certain bacteria to convert light energy into chemical energy.

Claims:
1. Albert Einstein was a genius.

Analysis:
{"analysis": [
{
    "claim": "Albert Einstein was a genius.",
    "reason": "The context and claim are unrelated.",
    "verdict": 0
}
]}

YOUR TURN:
Context: {{context}}
Claims:
{{claims}}
Analysis:)";

constexpr std::string_view kRagAnswer =
    R"(You're a helpful assistant supporting users with their questions on climate change. Answer the question based on the given contexts. Make sure to only use information that is fully grounded in the contexts.

Context:
{{passages}}

Question:
{{question}})";

void require_nonempty(const std::string& value, const char* what) {
    if (trim(value).empty()) {
        throw ValidationError(std::string(what) + " must not be empty");
    }
}

}  // namespace

std::string to_string(TemplateId id) {
    switch (id) {
        case TemplateId::claim_extraction: return "claim_extraction";
        case TemplateId::claim_verification: return "claim_verification";
        case TemplateId::rag_answer: return "rag_answer";
    }
    return "unknown";
}

const PromptTemplate& claim_extraction_template() {
    static const PromptTemplate t{TemplateId::claim_extraction, kClaimExtraction};
    return t;
}

const PromptTemplate& claim_verification_template() {
    static const PromptTemplate t{TemplateId::claim_verification, kClaimVerification};
    return t;
}

const PromptTemplate& rag_answer_template() {
    static const PromptTemplate t{TemplateId::rag_answer, kRagAnswer};
    return t;
}

std::string render_template(std::string_view text,
                            const std::map<std::string, std::string>& bindings) {
    std::string out;
    out.reserve(text.size());
    std::size_t pos = 0;
    while (pos < text.size()) {
        const std::size_t open = text.find("{{", pos);
        if (open == std::string_view::npos) {
            out.append(text.substr(pos));
            break;
        }
        const std::size_t close = text.find("}}", open + 2);
        if (close == std::string_view::npos) {
            out.append(text.substr(pos));
            break;
        }
        const std::string name(text.substr(open + 2, close - open - 2));
        auto it = bindings.find(name);
        if (it == bindings.end()) {
            throw ValidationError("unbound template placeholder {{" + name + "}}");
        }
        out.append(text.substr(pos, open - pos));
        out.append(it->second);
        pos = close + 2;
    }
    return out;
}

std::string year_or_nd(const std::optional<int>& year) {
    return year ? std::to_string(*year) : std::string("n.d.");
}

std::string render_claim_extraction_prompt(const std::string& question, const std::string& answer) {
    require_nonempty(question, "question");
    require_nonempty(answer, "answer");
    return render_template(kClaimExtraction, {{"question", question}, {"sentences", answer}});
}

std::string render_claim_verification_prompt(const std::string& context,
                                             const std::vector<std::string>& claims) {
    require_nonempty(context, "context");
    if (claims.empty()) {
        throw ValidationError("claim verification needs at least one claim");
    }
    std::string numbered;
    for (std::size_t i = 0; i < claims.size(); ++i) {
        if (i > 0) numbered += '\n';
        numbered += std::to_string(i + 1) + ". " + claims[i];
    }
    return render_template(kClaimVerification, {{"context", context}, {"claims", numbered}});
}

std::string render_rag_prompt(const std::string& question, const std::vector<RagPassage>& passages) {
    std::string blocks;
    for (std::size_t i = 0; i < passages.size(); ++i) {
        if (i > 0) blocks += '\n';
        blocks += "[[" + std::to_string(i) + "]] \"" + passages[i].title + "\", " +
                  year_or_nd(passages[i].year) + "\n" + passages[i].content;
    }
    return render_template(kRagAnswer, {{"passages", blocks}, {"question", question}});
}

}  // namespace ragfaith
