#include "tripletrag/prompts.hpp"

#include <algorithm>
#include <array>

#include "tripletrag/errors.hpp"
#include "tripletrag/text.hpp"

namespace tripletrag {

namespace {

constexpr const char* kDecomposeBody =
    R"(You are tasked with reasoning about a question and extracting the necessary knowledge triples to answer it.

Instructions:

1. Think step by step about what information is needed to answer this question

2. Form triples in the format: subject | predicate | object

3. Use "?" as placeholder for unknown entities

4. For comparative questions involving multiple entities, use distinct placeholders like ?entityA, ?directorA, ?directorB

5. Extract multiple triples if the question requires complex reasoning

Examples:

- Question: "What is the capital of France?"
  Reasoning: To answer this, I need to know what France's capital is.
  Triple: France | has capital | ?

- Question: "Who directed the movie that won Best Picture in 2020?"
  Reasoning: To answer this, I need to know which movie won Best Picture in 2020, and who directed that movie.
  Triples: ? | won Best Picture | 2020
           ? | is directed by | ?

- Question: "Which film whose director was born first, MovieA or MovieB?"
  Reasoning: To answer this, I need to know the director of each movie, and the birth year of each director to compare them.
  Triples: MovieA | is directed by | ?directorA
           MovieB | is directed by | ?directorB
           ?directorA | was born in | ?
           ?directorB | was born in | ?

Now analyze this question:

Question: {query}

Provide your response in this format:

Reasoning: [Your step-by-step reasoning about what information is needed]

Triples:
[List each triple on a new line in format: subject | predicate | object]
)";

constexpr const char* kResolveBody =
    R"(Example:
Context Propositions:
{context_propositions}

Fully Resolved Clue 1:
Subject: Lothair II
Predicate: has mother
Object: Ermengarde of Tours

Newly Searchable Clue 1:
Subject: Ermengarde of Tours
Predicate: died on
Object: ?

---

Now apply the same process to the following clues:
Use the context passages and propositions to resolve any '?' placeholders with as much detail as possible, grounding your answers in the passage content.
Instructions:

1. For searchable clues (one '?'), replace '?' with the correct entity to fully resolve it, including any relevant attributes.

2. For fuzzy clues (multiple '?'), generate a Newly Searchable Clue by replacing one of the placeholders with the correct entity, including any relevant context.

Original Query: {query}

Searchable Clues: {searchable_clues}

Fuzzy Clues: {fuzzy_clues}

Context Passages: {context_passages}

Context Propositions: {context_propositions}

Previous Resolved Clues: {resolved_clues}

Return two lists in this format:

Fully Resolved Clue 1:
Subject: ...
Predicate: ...
Object: ...

Fully Resolved Clue 2:
Subject: ...
Predicate: ...
Object: ...

Newly Searchable Clue 1:
Subject: ...
Predicate: ...
Object: ...

Newly Searchable Clue 2:
Subject: ...
Predicate: ...
Object: ...

(Continue numbering accordingly)
)";

constexpr const char* kAnswerBody =
    R"(Based on the reasoning clues, please answer the following question.

Question: {query}

Key Reasoning Clues:
{clues}

Instructions:

1. Analyze the question step by step

2. Use the reasoning clues to understand what information is needed

3. Provide ONLY a concise answer

Answer format requirements:

- For WH questions (who/what/where/when): Provide the exact entity, date, full name, or full place name only

- For yes/no questions: Answer only "yes" or "no"

- No explanations, reasoning, or additional text

- One entity or fact only

Answer:
)";

// Extraction instructions mirror the decomposition grammar so the same
// line parser serves both. Version-stamped into index metadata as
// "openie-v1" so an index always declares which extractor produced it.
constexpr const char* kExtractBody =
    R"(You are an information extraction system. Read the passage and list every factual knowledge triple it states.

Instructions:

1. Output one fact per line in the format: subject | predicate | object

2. Copy entity names verbatim from the passage

3. Do not use placeholders; only extract facts the passage states explicitly

4. Keep each subject, predicate, and object short and specific

5. Output nothing except the list of triples

Passage:
{passage}

Triples:
)";

bool is_slot_char(char c) { return (c >= 'a' && c <= 'z') || c == '_'; }

std::vector<std::string> scan_slots(std::string_view body) {
    std::vector<std::string> slots;
    std::size_t pos = 0;
    while ((pos = body.find('{', pos)) != std::string_view::npos) {
        const std::size_t close = body.find('}', pos + 1);
        if (close == std::string_view::npos) break;
        const auto name = body.substr(pos + 1, close - pos - 1);
        if (!name.empty() && std::all_of(name.begin(), name.end(), is_slot_char)) {
            std::string owned(name);
            if (std::find(slots.begin(), slots.end(), owned) == slots.end())
                slots.push_back(std::move(owned));
            pos = close + 1;
        } else {
            pos += 1;
        }
    }
    return slots;
}

PromptTemplate make_template(TemplateId id, const char* body) {
    return PromptTemplate{id, body, scan_slots(body)};
}

}  // namespace

const char* template_name(TemplateId id) {
    switch (id) {
        case TemplateId::Decompose: return "decompose";
        case TemplateId::Resolve: return "resolve";
        case TemplateId::Answer: return "answer";
        default: return "extract";
    }
}

TemplateId template_from_name(std::string_view name) {
    if (name == "decompose") return TemplateId::Decompose;
    if (name == "resolve") return TemplateId::Resolve;
    if (name == "answer") return TemplateId::Answer;
    if (name == "extract") return TemplateId::Extract;
    throw InputError("unknown template '" + std::string(name) + "'");
}

const PromptTemplate& get_template(TemplateId id) {
    static const std::array<PromptTemplate, 4> templates = {
        make_template(TemplateId::Decompose, kDecomposeBody),
        make_template(TemplateId::Resolve, kResolveBody),
        make_template(TemplateId::Answer, kAnswerBody),
        make_template(TemplateId::Extract, kExtractBody),
    };
    return templates[static_cast<std::size_t>(id)];
}

std::string render_prompt(TemplateId id, const Bindings& bindings) {
    const PromptTemplate& tpl = get_template(id);
    for (const auto& slot : tpl.slots) {
        if (!bindings.count(slot)) throw MissingSlotError(template_name(id), slot);
    }
    std::string out;
    out.reserve(tpl.body.size());
    std::size_t pos = 0;
    const std::string& body = tpl.body;
    while (pos < body.size()) {
        const std::size_t open = body.find('{', pos);
        if (open == std::string::npos) {
            out.append(body, pos, std::string::npos);
            break;
        }
        const std::size_t close = body.find('}', open + 1);
        std::string_view name =
            close == std::string::npos ? std::string_view{}
                                       : std::string_view(body).substr(open + 1, close - open - 1);
        const bool is_slot = !name.empty() && std::all_of(name.begin(), name.end(), is_slot_char);
        if (is_slot) {
            out.append(body, pos, open - pos);
            out.append(bindings.at(std::string(name)));
            pos = close + 1;
        } else {
            out.append(body, pos, open - pos + 1);
            pos = open + 1;
        }
    }
    return out;
}

std::string bindings_fingerprint(const Bindings& bindings) {
    std::vector<std::string_view> values;
    values.reserve(bindings.size());
    for (const auto& [_, v] : bindings) values.push_back(v);
    std::sort(values.begin(), values.end());
    std::uint64_t h = kFnvOffset;
    for (const auto v : values) {
        std::uint64_t len = v.size();
        char len_bytes[8];
        for (int i = 0; i < 8; ++i) len_bytes[i] = static_cast<char>((len >> (8 * i)) & 0xFF);
        h = fnv1a64(std::string_view(len_bytes, 8), h);
        h = fnv1a64(v, h);
    }
    return to_hex16(h);
}

}  // namespace tripletrag
