#pragma once
// Online stage: decomposition of the question into placeholder triplets,
// the bounded retrieve-resolve loop, and the two-branch final answer.

#include <functional>
#include <string>
#include <vector>

#include "tripletrag/core.hpp"
#include "tripletrag/gateway.hpp"
#include "tripletrag/index.hpp"
#include "tripletrag/retrieve.hpp"
#include "tripletrag/usage.hpp"

namespace tripletrag {

struct ResolveConfig {
    std::size_t k = 5;       // unique source chunks per retrieval round
    int max_rounds = 3;      // resolve-loop iteration cap
    std::size_t pool_width = 0;        // 0 -> retrieval default (8*k)
    bool dedup_rounds = false;         // exclude chunks seen in earlier rounds
    std::size_t chunk_char_budget = 0; // per-passage prompt truncation; 0 = none
    bool mechanical_substitution = false;
};

// Round-0 state from the decomposition prompt. If the model output
// yields no parseable triplets, the state degrades to one searchable
// sentinel (query, "answers", "?") so retrieval falls back to searching
// the whole question.
ResolutionState decompose(Gateway& gateway, const std::string& query);

// Prompt fragment renderers, exposed so tests can reproduce exact
// bindings (and therefore transcript fingerprints).
std::string render_clues(const std::vector<Triplet>& clues);
std::string render_propositions(const TripletIndex& index, const std::vector<ScoredProp>& props);
std::string render_passages(const TripletIndex& index, const std::vector<std::string>& chunk_ids,
                            std::size_t char_budget = 0);

Bindings make_resolve_bindings(const std::string& query, const ResolutionState& state,
                               const TripletIndex& index, const RetrievalResult& retrieval,
                               std::size_t char_budget = 0);

// One iteration: retrieve for the searchable set (or, when only fuzzy
// triplets remain, for the raw query text as a single pseudo-proposition),
// prompt the resolver, re-classify its output locally, and fold it into
// the state. Appends a RoundRecord. Requires a not-fully-resolved state.
ResolutionState resolve_round(Gateway& gateway, const TripletIndex& index,
                              const std::string& query, const ResolutionState& state,
                              const ResolveConfig& config);

// Clue list for the final prompt: resolved only when nothing is left
// unresolved, otherwise resolved plus leftover searchable. Fuzzy clues
// are never given to the answer prompt.
Bindings make_answer_bindings(const std::string& query, const ResolutionState& state);

// Renders the answer prompt and returns the generation, trimmed, with a
// leading "Answer:" label stripped if the model echoed one. An empty
// generation is a GatewayError(EmptyAnswer).
std::string answer(Gateway& gateway, const std::string& query, const ResolutionState& state);

struct QueryResult {
    std::string answer;
    bool fully_resolved = false;
    int rounds_used = 0;
    std::string answer_branch;           // "resolved_only" or "with_searchable"
    std::vector<Triplet> excluded_fuzzy; // fuzzy clues withheld from the answer prompt
    ResolutionState final_state;
    UsageLedger usage;                   // this query's calls only

    nlohmann::json to_json() const;
};

// Invoked after each completed round, before the next begins; lets
// callers stream trace lines and keeps a partial trace observable even
// if a later phase throws.
using RoundSink = std::function<void(const RoundRecord&)>;

QueryResult run_query(Gateway& gateway, const TripletIndex& index, const std::string& query,
                      const ResolveConfig& config = {}, const RoundSink& sink = nullptr);

}  // namespace tripletrag
