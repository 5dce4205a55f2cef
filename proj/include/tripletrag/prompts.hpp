#pragma once
// Prompt templates and rendering. Slots are {lower_snake_case} markers;
// rendering replaces every occurrence and fails on unbound slots, so a
// rendered prompt can never leak a marker to the model.

#include <map>
#include <string>
#include <string_view>
#include <vector>

namespace tripletrag {

enum class TemplateId { Decompose, Resolve, Answer, Extract };

using Bindings = std::map<std::string, std::string>;

const char* template_name(TemplateId id);
TemplateId template_from_name(std::string_view name);  // throws InputError

struct PromptTemplate {
    TemplateId id;
    std::string body;
    std::vector<std::string> slots;  // unique, in first-appearance order
};

const PromptTemplate& get_template(TemplateId id);

// Byte-deterministic; throws MissingSlotError for any unbound slot.
std::string render_prompt(TemplateId id, const Bindings& bindings);

// Fingerprint over the sorted binding values (template id is paired with
// it separately). Mock transcripts key on this, so cosmetic template edits
// do not invalidate recorded responses.
std::string bindings_fingerprint(const Bindings& bindings);

}  // namespace tripletrag
