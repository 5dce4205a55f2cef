#include "tripletrag/retrieve.hpp"

#include <algorithm>
#include <map>

#include "tripletrag/errors.hpp"

namespace tripletrag {

namespace {

bool ranks_before(const ScoredProp& a, const ScoredProp& b) {
    if (a.score != b.score) return a.score > b.score;
    return a.prop_id < b.prop_id;
}

}  // namespace

std::string query_proposition(const Triplet& t) {
    if (classify(t) != TripletClass::Searchable) {
        throw ContractViolation("query_proposition requires exactly one placeholder: " +
                                t.to_line());
    }
    std::string out;
    for (int i = 0; i < 3; ++i) {
        const std::string& f = t.field(i);
        if (is_placeholder(f)) continue;
        if (!out.empty()) out += ' ';
        out += f;
    }
    return out;
}

std::vector<ScoredProp> search_topn(const TripletIndex& index, const EmbeddingVector& v,
                                    std::size_t n) {
    if (n == 0) throw ContractViolation("search_topn requires n >= 1");
    if (index.size() == 0) return {};
    if (v.size() != index.dim()) {
        throw InputError("query embedding dimension " + std::to_string(v.size()) +
                         " does not match index dimension " + std::to_string(index.dim()),
                         "retrieve");
    }
    std::vector<ScoredProp> scored;
    scored.reserve(index.size());
    for (std::size_t r = 0; r < index.size(); ++r) {
        const float* row = index.row(static_cast<std::int64_t>(r));
        double dot = 0.0;
        for (std::size_t c = 0; c < v.size(); ++c) dot += static_cast<double>(row[c]) * v[c];
        scored.push_back({static_cast<std::int64_t>(r), dot});
    }
    std::size_t keep = std::min(n, scored.size());
    std::partial_sort(scored.begin(), scored.begin() + static_cast<std::ptrdiff_t>(keep),
                      scored.end(), ranks_before);
    scored.resize(keep);
    return scored;
}

std::vector<ScoredProp> pool_candidates(const TripletIndex& index,
                                        const std::vector<EmbeddingVector>& queries,
                                        std::size_t pool_width) {
    std::map<std::int64_t, double> best;
    for (const auto& q : queries) {
        for (const auto& cand : search_topn(index, q, pool_width)) {
            auto [it, inserted] = best.emplace(cand.prop_id, cand.score);
            if (!inserted && cand.score > it->second) it->second = cand.score;
        }
    }
    std::vector<ScoredProp> pool;
    pool.reserve(best.size());
    for (const auto& [id, score] : best) pool.push_back({id, score});
    std::sort(pool.begin(), pool.end(), ranks_before);
    return pool;
}

RetrievalResult adaptive_retrieve_vectors(const TripletIndex& index,
                                          const std::vector<EmbeddingVector>& queries,
                                          const RetrieveOptions& options) {
    if (options.k == 0) throw ContractViolation("adaptive retrieval requires k >= 1");
    if (queries.empty()) throw ContractViolation("adaptive retrieval requires at least one query");

    const std::size_t cap = index.size();
    std::size_t width = options.pool_width == 0 ? 8 * options.k : options.pool_width;

    while (true) {
        std::size_t w = std::min(std::max<std::size_t>(width, 1), std::max<std::size_t>(cap, 1));
        auto pool = cap == 0 ? std::vector<ScoredProp>{} : pool_candidates(index, queries, w);

        RetrievalResult result;
        std::set<std::string> seen_chunks;
        std::size_t inspected = 0;
        for (const auto& cand : pool) {
            if (result.chunk_ids.size() == options.k) break;
            ++inspected;
            const std::string& chunk_id = index.proposition(cand.prop_id).chunk_id;
            if (options.exclude_chunks && options.exclude_chunks->count(chunk_id)) continue;
            result.propositions.push_back(cand);
            if (seen_chunks.insert(chunk_id).second) result.chunk_ids.push_back(chunk_id);
        }
        bool reached = result.chunk_ids.size() == options.k;

        // Within the first w pool positions the merged pool provably
        // matches the full ranking, so a walk that stayed inside them is
        // exact; at w == index size the pool is the full ranking itself.
        if (w >= cap) {
            result.exhausted = !reached;
            return result;
        }
        if (reached && inspected <= w) return result;
        width = std::min(w * 2, cap);
    }
}

RetrievalResult adaptive_retrieve(Gateway& gateway, const TripletIndex& index,
                                  const std::vector<Triplet>& searchable,
                                  const RetrieveOptions& options) {
    if (searchable.empty()) {
        throw ContractViolation("adaptive retrieval requires a non-empty searchable set");
    }
    std::vector<std::string> texts;
    texts.reserve(searchable.size());
    for (const auto& t : searchable) texts.push_back(query_proposition(t));
    return adaptive_retrieve_vectors(index, gateway.embed_batch(texts), options);
}

}  // namespace tripletrag
