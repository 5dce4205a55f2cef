#include "tripletrag/resolve.hpp"

#include <algorithm>
#include <set>

#include "tripletrag/errors.hpp"
#include "tripletrag/parsers.hpp"
#include "tripletrag/text.hpp"

namespace tripletrag {

namespace {

// Byte budget cut that never splits a UTF-8 sequence.
std::string truncate_utf8(const std::string& text, std::size_t budget) {
    if (budget == 0 || text.size() <= budget) return text;
    std::size_t end = budget;
    while (end > 0 && (static_cast<unsigned char>(text[end]) & 0xc0) == 0x80) --end;
    return text.substr(0, end);
}

bool derived_from_any(const Triplet& candidate, const ResolutionState& state) {
    for (const auto& s : state.searchable) {
        if (derives_from(candidate, s)) return true;
    }
    for (const auto& f : state.fuzzy) {
        if (derives_from(candidate, f)) return true;
    }
    return std::find(state.resolved.begin(), state.resolved.end(), candidate) !=
           state.resolved.end();
}

// Tokens spent by the single completion this round issued: the ledger
// entries appended past `mark`.
void fill_round_tokens(const UsageLedger& ledger, std::size_t mark, RoundRecord& record) {
    auto entries = ledger.entries();
    for (std::size_t i = mark; i < entries.size(); ++i) {
        record.input_tokens += entries[i].input_tokens;
        record.output_tokens += entries[i].output_tokens;
    }
}

}  // namespace

ResolutionState decompose(Gateway& gateway, const std::string& query) {
    if (normalize_ws(query).empty()) throw InputError("query is empty", "decompose");
    std::string response = gateway.complete(TemplateId::Decompose, {{"query", query}}, "decompose");
    try {
        return make_initial_state(parse_decomposition(response));
    } catch (const DecompositionError&) {
        return make_initial_state({Triplet::make(query, "answers", "?")});
    }
}

std::string render_clues(const std::vector<Triplet>& clues) {
    std::string out;
    for (const auto& t : clues) {
        if (!out.empty()) out += '\n';
        out += t.to_line();
    }
    return out;
}

std::string render_propositions(const TripletIndex& index, const std::vector<ScoredProp>& props) {
    std::string out;
    for (const auto& p : props) {
        if (!out.empty()) out += '\n';
        out += index.proposition(p.prop_id).triplet.to_line();
    }
    return out;
}

std::string render_passages(const TripletIndex& index, const std::vector<std::string>& chunk_ids,
                            std::size_t char_budget) {
    std::string out;
    for (const auto& id : chunk_ids) {
        if (!out.empty()) out += "\n\n";
        out += truncate_utf8(index.chunk(id).text, char_budget);
    }
    return out;
}

Bindings make_resolve_bindings(const std::string& query, const ResolutionState& state,
                               const TripletIndex& index, const RetrievalResult& retrieval,
                               std::size_t char_budget) {
    return Bindings{
        {"query", query},
        {"searchable_clues", render_clues(state.searchable)},
        {"fuzzy_clues", render_clues(state.fuzzy)},
        {"context_passages", render_passages(index, retrieval.chunk_ids, char_budget)},
        {"context_propositions", render_propositions(index, retrieval.propositions)},
        {"resolved_clues", render_clues(state.resolved)},
    };
}

ResolutionState resolve_round(Gateway& gateway, const TripletIndex& index,
                              const std::string& query, const ResolutionState& state,
                              const ResolveConfig& config) {
    if (state.fully_resolved()) {
        throw ContractViolation("resolve_round on a fully resolved state");
    }

    std::set<std::string> exclude;
    RetrieveOptions ropts;
    ropts.k = config.k;
    ropts.pool_width = config.pool_width;
    if (config.dedup_rounds) {
        for (const auto& r : state.trace) {
            exclude.insert(r.retrieved_chunk_ids.begin(), r.retrieved_chunk_ids.end());
        }
        ropts.exclude_chunks = &exclude;
    }

    bool fallback = state.searchable.empty();
    RetrievalResult retrieval =
        fallback ? adaptive_retrieve_vectors(index, {gateway.embed(query)}, ropts)
                 : adaptive_retrieve(gateway, index, state.searchable, ropts);

    Bindings bindings =
        make_resolve_bindings(query, state, index, retrieval, config.chunk_char_budget);
    std::size_t mark = gateway.usage().entries().size();
    std::string response = gateway.complete(TemplateId::Resolve, bindings, "resolve");
    ResolutionParse parsed = parse_resolution(response);

    RoundRecord record;
    record.retrieved_props.reserve(retrieval.propositions.size());
    for (const auto& p : retrieval.propositions) {
        record.retrieved_props.emplace_back(p.prop_id, p.score);
    }
    record.retrieved_chunk_ids = retrieval.chunk_ids;
    record.fallback_retrieval = fallback;
    for (const auto& t : parsed.resolved) {
        if (!derived_from_any(t, state)) record.unsolicited.push_back(t);
    }
    for (const auto& t : parsed.searchable) {
        if (!derived_from_any(t, state)) record.unsolicited.push_back(t);
    }
    fill_round_tokens(gateway.usage(), mark, record);

    UpdateOptions uopts;
    uopts.mechanical_substitution = config.mechanical_substitution;
    return update_state(state, parsed.resolved, parsed.searchable, std::move(record), uopts);
}

Bindings make_answer_bindings(const std::string& query, const ResolutionState& state) {
    std::vector<Triplet> clues = state.resolved;
    if (!state.fully_resolved()) {
        clues.insert(clues.end(), state.searchable.begin(), state.searchable.end());
    }
    return Bindings{{"query", query}, {"clues", render_clues(clues)}};
}

std::string answer(Gateway& gateway, const std::string& query, const ResolutionState& state) {
    std::string response =
        gateway.complete(TemplateId::Answer, make_answer_bindings(query, state), "answer");
    std::string_view text = trim_ws(response);
    if (starts_with_ci(text, "Answer:")) {
        text = trim_ws(text.substr(std::string_view("Answer:").size()));
    }
    if (text.empty()) {
        throw GatewayError(GatewayError::Kind::EmptyAnswer, "answer",
                           "answer generation came back empty");
    }
    return std::string(text);
}

nlohmann::json QueryResult::to_json() const {
    nlohmann::json rounds = nlohmann::json::array();
    for (const auto& r : final_state.trace) rounds.push_back(r.to_json());
    nlohmann::json excluded = nlohmann::json::array();
    for (const auto& t : excluded_fuzzy) excluded.push_back(t.to_line());
    return nlohmann::json{{"answer", answer},
                          {"fully_resolved", fully_resolved},
                          {"rounds_used", rounds_used},
                          {"answer_branch", answer_branch},
                          {"excluded_fuzzy", excluded},
                          {"final_sets", final_state.sets_to_json()},
                          {"rounds", rounds},
                          {"usage", usage.to_json()}};
}

QueryResult run_query(Gateway& gateway, const TripletIndex& index, const std::string& query,
                      const ResolveConfig& config, const RoundSink& sink) {
    std::size_t usage_mark = gateway.usage().entries().size();

    ResolutionState state = decompose(gateway, query);
    while (!is_terminal(state, config.max_rounds)) {
        state = resolve_round(gateway, index, query, state, config);
        if (sink) sink(state.trace.back());
    }

    QueryResult result;
    result.fully_resolved = state.fully_resolved();
    result.rounds_used = state.round;
    result.answer_branch = result.fully_resolved ? "resolved_only" : "with_searchable";
    if (!result.fully_resolved) result.excluded_fuzzy = state.fuzzy;
    result.answer = answer(gateway, query, state);
    result.final_state = std::move(state);

    auto entries = gateway.usage().entries();
    for (std::size_t i = usage_mark; i < entries.size(); ++i) result.usage.add(entries[i]);
    return result;
}

}  // namespace tripletrag
