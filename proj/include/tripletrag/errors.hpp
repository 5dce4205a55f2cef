#pragma once
// Error taxonomy shared across the pipeline.
//
// ContractViolation covers broken preconditions (programming errors);
// everything else derives from Error and carries a phase tag where the
// failure surfaced (decompose / resolve / answer / extract / embed / io).

#include <stdexcept>
#include <string>

namespace tripletrag {

class Error : public std::runtime_error {
public:
    Error(std::string phase, const std::string& what)
        : std::runtime_error(phase.empty() ? what : "[" + phase + "] " + what),
          phase_(std::move(phase)) {}

    const std::string& phase() const noexcept { return phase_; }

private:
    std::string phase_;
};

// Broken API precondition, e.g. verbalizing a triplet with placeholders.
class ContractViolation : public std::logic_error {
public:
    explicit ContractViolation(const std::string& what) : std::logic_error(what) {}
};

// Bad user input: unreadable files, malformed JSONL, invalid flag combos.
class InputError : public Error {
public:
    explicit InputError(const std::string& what, std::string phase = "io")
        : Error(std::move(phase), what) {}
};

// LLM produced no parseable triplets during query decomposition.
class DecompositionError : public Error {
public:
    explicit DecompositionError(const std::string& what) : Error("decompose", what) {}
};

// A rendered prompt template was left with an unbound slot.
class MissingSlotError : public Error {
public:
    MissingSlotError(const std::string& template_id, const std::string& slot)
        : Error("prompt", "template '" + template_id + "' has unbound slot '" + slot + "'"),
          slot_(slot) {}

    const std::string& slot() const noexcept { return slot_; }

private:
    std::string slot_;
};

// Transport and protocol failures from the LLM / embedding backend.
class GatewayError : public Error {
public:
    enum class Kind {
        Transport,       // connection failure or 5xx after retries
        Auth,            // 401 / 403
        ContextLength,   // request rejected as too long
        UnmatchedPrompt, // strict mock has no entry for this fingerprint
        BadResponse,     // response body does not match the expected schema
        EmptyAnswer,     // generation came back empty where text is required
    };

    GatewayError(Kind kind, std::string phase, const std::string& what)
        : Error(std::move(phase), what), kind_(kind) {}

    Kind kind() const noexcept { return kind_; }

private:
    Kind kind_;
};

// Persisted index failed validation on load.
class IndexFormatError : public Error {
public:
    explicit IndexFormatError(const std::string& what) : Error("index", what) {}
};

}  // namespace tripletrag
