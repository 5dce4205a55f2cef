#include "tripletrag/core.hpp"

#include <algorithm>
#include <map>

#include "tripletrag/errors.hpp"
#include "tripletrag/text.hpp"

namespace tripletrag {

Triplet Triplet::make(std::string_view subject, std::string_view predicate,
                      std::string_view object) {
    auto t = try_make(subject, predicate, object);
    if (!t) throw ContractViolation("triplet field empty after normalization");
    return *t;
}

std::optional<Triplet> Triplet::try_make(std::string_view subject,
                                         std::string_view predicate,
                                         std::string_view object) {
    Triplet t{normalize_ws(subject), normalize_ws(predicate), normalize_ws(object)};
    if (t.subject.empty() || t.predicate.empty() || t.object.empty()) return std::nullopt;
    return t;
}

const std::string& Triplet::field(int i) const {
    switch (i) {
        case 0: return subject;
        case 1: return predicate;
        default: return object;
    }
}

std::string Triplet::to_line() const {
    auto escape = [](const std::string& f) {
        std::string out = f;
        std::replace(out.begin(), out.end(), '|', '/');
        return out;
    };
    return escape(subject) + " | " + escape(predicate) + " | " + escape(object);
}

bool is_placeholder(std::string_view field) {
    return !field.empty() && field.front() == '?';
}

std::string_view placeholder_name(std::string_view field) {
    if (!is_placeholder(field)) return {};
    return field.substr(1);
}

int count_placeholders(const Triplet& t) {
    int n = 0;
    for (int i = 0; i < 3; ++i)
        if (is_placeholder(t.field(i))) ++n;
    return n;
}

TripletClass classify(const Triplet& t) {
    switch (count_placeholders(t)) {
        case 0: return TripletClass::Resolved;
        case 1: return TripletClass::Searchable;
        default: return TripletClass::Fuzzy;
    }
}

const char* to_string(TripletClass c) {
    switch (c) {
        case TripletClass::Resolved: return "resolved";
        case TripletClass::Searchable: return "searchable";
        default: return "fuzzy";
    }
}

bool derives_from(const Triplet& candidate, const Triplet& fuzzy) {
    for (int i = 0; i < 3; ++i) {
        const std::string& ff = fuzzy.field(i);
        const std::string& cf = candidate.field(i);
        if (!is_placeholder(ff)) {
            if (cf != ff) return false;
        } else if (is_placeholder(cf)) {
            const auto fname = placeholder_name(ff);
            const auto cname = placeholder_name(cf);
            if (!fname.empty() && !cname.empty() && fname != cname) return false;
        }
        // placeholder in fuzzy absorbs any fill
    }
    return true;
}

namespace {

nlohmann::json triplets_to_json(const std::vector<Triplet>& ts) {
    nlohmann::json arr = nlohmann::json::array();
    for (const auto& t : ts) arr.push_back({t.subject, t.predicate, t.object});
    return arr;
}

bool contains(const std::vector<Triplet>& v, const Triplet& t) {
    return std::find(v.begin(), v.end(), t) != v.end();
}

void push_unique(std::vector<Triplet>& v, const Triplet& t) {
    if (!contains(v, t)) v.push_back(t);
}

// Binds ?name -> entity wherever a resolved triplet matches a prior clue
// on the other fields. Ambiguous names (two distinct fills) are dropped.
std::map<std::string, std::string> infer_bindings(const std::vector<Triplet>& resolved_new,
                                                  const std::vector<Triplet>& prior_clues) {
    std::map<std::string, std::string> bindings;
    std::map<std::string, bool> ambiguous;
    for (const auto& r : resolved_new) {
        for (const auto& clue : prior_clues) {
            if (!derives_from(r, clue)) continue;
            for (int i = 0; i < 3; ++i) {
                const auto name = placeholder_name(clue.field(i));
                if (name.empty() || is_placeholder(r.field(i))) continue;
                const std::string key(name);
                auto it = bindings.find(key);
                if (it == bindings.end())
                    bindings[key] = r.field(i);
                else if (it->second != r.field(i))
                    ambiguous[key] = true;
            }
        }
    }
    for (const auto& [name, _] : ambiguous) bindings.erase(name);
    return bindings;
}

Triplet substitute(const Triplet& t, const std::map<std::string, std::string>& bindings) {
    auto sub = [&](const std::string& f) -> std::string {
        const auto name = placeholder_name(f);
        if (name.empty()) return f;
        auto it = bindings.find(std::string(name));
        return it == bindings.end() ? f : it->second;
    };
    return Triplet{sub(t.subject), sub(t.predicate), sub(t.object)};
}

}  // namespace

nlohmann::json RoundRecord::to_json() const {
    nlohmann::json props = nlohmann::json::array();
    for (const auto& [id, score] : retrieved_props) props.push_back({{"prop_id", id}, {"score", score}});
    return {
        {"round", round_index},
        {"retrieved_props", props},
        {"retrieved_chunks", retrieved_chunk_ids},
        {"fallback_retrieval", fallback_retrieval},
        {"newly_resolved", triplets_to_json(newly_resolved)},
        {"newly_searchable", triplets_to_json(newly_searchable)},
        {"unsolicited", triplets_to_json(unsolicited)},
        {"usage", {{"input_tokens", input_tokens}, {"output_tokens", output_tokens}}},
    };
}

nlohmann::json ResolutionState::sets_to_json() const {
    return {
        {"resolved", triplets_to_json(resolved)},
        {"searchable", triplets_to_json(searchable)},
        {"fuzzy", triplets_to_json(fuzzy)},
    };
}

ResolutionState make_initial_state(const std::vector<Triplet>& triplets) {
    ResolutionState s;
    for (const auto& t : triplets) {
        switch (classify(t)) {
            case TripletClass::Resolved: push_unique(s.resolved, t); break;
            case TripletClass::Searchable: push_unique(s.searchable, t); break;
            case TripletClass::Fuzzy: push_unique(s.fuzzy, t); break;
        }
    }
    return s;
}

ResolutionState update_state(const ResolutionState& s,
                             const std::vector<Triplet>& new_resolved,
                             const std::vector<Triplet>& new_searchable,
                             RoundRecord record, const UpdateOptions& options) {
    // Re-route every candidate by its actual placeholder count; the labels
    // the resolver put on them are not trusted.
    std::vector<Triplet> routed_resolved;
    std::vector<Triplet> routed_searchable;
    std::vector<Triplet> routed_fuzzy;
    auto route = [&](const Triplet& t) {
        switch (classify(t)) {
            case TripletClass::Resolved: push_unique(routed_resolved, t); break;
            case TripletClass::Searchable: push_unique(routed_searchable, t); break;
            case TripletClass::Fuzzy: push_unique(routed_fuzzy, t); break;
        }
    };
    for (const auto& t : new_resolved) route(t);
    for (const auto& t : new_searchable) route(t);

    ResolutionState next;
    next.resolved = s.resolved;
    for (const auto& t : routed_resolved) push_unique(next.resolved, t);

    next.searchable = routed_searchable;  // replacement, not union

    // Carry over fuzzy triplets, minus those some new triplet derives from.
    std::vector<Triplet> fuzzy_pool = s.fuzzy;
    for (const auto& t : routed_fuzzy) push_unique(fuzzy_pool, t);
    std::vector<Triplet> progressed = routed_resolved;
    progressed.insert(progressed.end(), routed_searchable.begin(), routed_searchable.end());
    for (const auto& f : fuzzy_pool) {
        const bool matched = std::any_of(progressed.begin(), progressed.end(),
                                         [&](const Triplet& n) { return derives_from(n, f); });
        if (!matched) push_unique(next.fuzzy, f);
    }

    if (options.mechanical_substitution && !next.fuzzy.empty()) {
        std::vector<Triplet> prior_clues = s.searchable;
        prior_clues.insert(prior_clues.end(), s.fuzzy.begin(), s.fuzzy.end());
        const auto bindings = infer_bindings(routed_resolved, prior_clues);
        if (!bindings.empty()) {
            std::vector<Triplet> remaining;
            for (const auto& f : next.fuzzy) {
                const Triplet sub = substitute(f, bindings);
                if (sub == f) {
                    remaining.push_back(f);
                    continue;
                }
                switch (classify(sub)) {
                    case TripletClass::Resolved: push_unique(next.resolved, sub); break;
                    case TripletClass::Searchable: push_unique(next.searchable, sub); break;
                    case TripletClass::Fuzzy: push_unique(remaining, sub); break;
                }
            }
            next.fuzzy = std::move(remaining);
        }
    }

    next.round = s.round + 1;
    next.trace = s.trace;
    record.round_index = next.round;
    record.newly_resolved = routed_resolved;
    record.newly_searchable = next.searchable;
    next.trace.push_back(std::move(record));
    return next;
}

bool is_terminal(const ResolutionState& s, int max_rounds) {
    return s.fully_resolved() || s.round >= max_rounds;
}

}  // namespace tripletrag
