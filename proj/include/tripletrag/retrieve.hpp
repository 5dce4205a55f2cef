#pragma once
// Adaptive retrieval: searchable triplets become query propositions,
// per-query candidates are pooled globally at max score, and the sorted
// pool is walked until context from k unique source chunks is covered.

#include <cstdint>
#include <set>
#include <string>
#include <vector>

#include "tripletrag/gateway.hpp"
#include "tripletrag/index.hpp"

namespace tripletrag {

struct ScoredProp {
    std::int64_t prop_id = -1;
    double score = 0.0;
    bool operator==(const ScoredProp&) const = default;
};

struct RetrievalResult {
    std::vector<ScoredProp> propositions;  // walk order
    std::vector<std::string> chunk_ids;    // first-touch order, no duplicates
    bool exhausted = false;                // pool ran out before k unique chunks
};

// The two known fields joined by one space, field order preserved.
// Requires exactly one placeholder.
std::string query_proposition(const Triplet& t);

// Exact top-n by dot product (rows are unit vectors, so dot = cosine).
// Descending score, ties by ascending prop_id; returns fewer than n only
// when the index is smaller.
std::vector<ScoredProp> search_topn(const TripletIndex& index, const EmbeddingVector& v,
                                    std::size_t n);

// Per-query top-`pool_width` candidates merged into one pool: each
// prop_id keeps its maximum score across queries; globally sorted
// (score desc, prop_id asc). Adding a query never removes a pool member.
std::vector<ScoredProp> pool_candidates(const TripletIndex& index,
                                        const std::vector<EmbeddingVector>& queries,
                                        std::size_t pool_width);

struct RetrieveOptions {
    std::size_t k = 5;
    // 0 selects the default of 8*k. Whenever the walk cannot be proven
    // equal to a full scan at the current width (pool ran out, or the
    // walk consumed more positions than one query's pool is guaranteed
    // to cover), the width doubles and pooling reruns, up to index size.
    std::size_t pool_width = 0;
    // Chunks to skip entirely (their propositions are not retrieved);
    // used when earlier rounds' chunks are excluded from later rounds.
    const std::set<std::string>* exclude_chunks = nullptr;
};

// Core walk over precomputed query vectors. Deterministic; equal to a
// full-scan ranking walked with the same stopping rule.
RetrievalResult adaptive_retrieve_vectors(const TripletIndex& index,
                                          const std::vector<EmbeddingVector>& queries,
                                          const RetrieveOptions& options);

// Embeds each searchable triplet's query proposition, then walks.
RetrievalResult adaptive_retrieve(Gateway& gateway, const TripletIndex& index,
                                  const std::vector<Triplet>& searchable,
                                  const RetrieveOptions& options);

}  // namespace tripletrag
