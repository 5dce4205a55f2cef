#pragma once
// Triplets, placeholder semantics, and the per-query resolution state.
//
// A triplet field is a placeholder when it starts with '?'; "?" alone is
// anonymous, "?directorA" carries an identity usable for cross-triplet
// coreference. Placeholder count drives the three-way taxonomy:
//   0 -> Resolved, 1 -> Searchable, >=2 -> Fuzzy.

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

namespace tripletrag {

struct Triplet {
    std::string subject;
    std::string predicate;
    std::string object;

    // Normalizes each field (trim, collapse whitespace runs); throws
    // ContractViolation if any field is empty afterwards.
    static Triplet make(std::string_view subject, std::string_view predicate,
                        std::string_view object);

    // Same normalization, but reports failure instead of throwing.
    static std::optional<Triplet> try_make(std::string_view subject,
                                           std::string_view predicate,
                                           std::string_view object);

    const std::string& field(int i) const;

    bool operator==(const Triplet&) const = default;

    // "subject | predicate | object" with '|' inside fields escaped to '/'.
    std::string to_line() const;
};

bool is_placeholder(std::string_view field);

// Identity after the leading '?'; empty for the anonymous placeholder.
// Only meaningful when is_placeholder(field).
std::string_view placeholder_name(std::string_view field);

int count_placeholders(const Triplet& t);

enum class TripletClass { Resolved, Searchable, Fuzzy };

TripletClass classify(const Triplet& t);

const char* to_string(TripletClass c);

// True when `candidate` is a plausible descendant of `fuzzy`: every
// non-placeholder field of `fuzzy` matches exactly, and positions where
// both sides carry named placeholders agree on the name. Placeholder
// positions of `fuzzy` otherwise absorb any fill.
bool derives_from(const Triplet& candidate, const Triplet& fuzzy);

// One retrieve-resolve iteration, kept for the trace log.
struct RoundRecord {
    int round_index = 0;
    std::vector<std::pair<std::int64_t, double>> retrieved_props;  // (prop_id, score)
    std::vector<std::string> retrieved_chunk_ids;                  // first-touch order
    bool fallback_retrieval = false;  // fuzzy-only round searched with the raw query
    std::vector<Triplet> newly_resolved;
    std::vector<Triplet> newly_searchable;
    std::vector<Triplet> unsolicited;  // resolver output not derived from any clue
    std::int64_t input_tokens = 0;
    std::int64_t output_tokens = 0;

    nlohmann::json to_json() const;
};

// The mutable partition of one query's triplets. The three sets are
// disjoint by construction: equal triplets have equal placeholder counts,
// and each set only admits its own class.
struct ResolutionState {
    std::vector<Triplet> resolved;
    std::vector<Triplet> searchable;
    std::vector<Triplet> fuzzy;
    int round = 0;
    std::vector<RoundRecord> trace;

    bool fully_resolved() const { return searchable.empty() && fuzzy.empty(); }

    nlohmann::json sets_to_json() const;
};

// Partitions decomposition output into a round-0 state.
ResolutionState make_initial_state(const std::vector<Triplet>& triplets);

struct UpdateOptions {
    // Experimental: substitute placeholder names bound by this round's
    // resolutions into remaining fuzzy triplets without an LLM round.
    bool mechanical_substitution = false;
};

// State transition for one round. Every incoming triplet is re-classified
// locally; the LLM's resolved/searchable labels are hints only, and a
// mislabeled triplet is re-routed to the set its placeholder count demands.
//   resolved'   = resolved U new_resolved            (monotone)
//   searchable' = new_searchable                     (replacement)
//   fuzzy'      = fuzzy \ derived(new_resolved U new_searchable)
// Duplicate insertions are no-ops. `record` is completed (round index,
// routed lists) and appended to the trace.
ResolutionState update_state(const ResolutionState& s,
                             const std::vector<Triplet>& new_resolved,
                             const std::vector<Triplet>& new_searchable,
                             RoundRecord record = {},
                             const UpdateOptions& options = {});

// Termination test: nothing left to resolve, or the round budget is spent.
bool is_terminal(const ResolutionState& s, int max_rounds);

}  // namespace tripletrag
