#pragma once
// Shared scaffolding for the test binaries: temp directories, seeded
// randomness, synthetic indexes with a brute-force retrieval oracle, and
// a small film corpus whose whole two-round resolution is scripted.

#include <cstdint>
#include <filesystem>
#include <memory>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "json.hpp"

#include "tripletrag/core.hpp"
#include "tripletrag/gateway.hpp"
#include "tripletrag/index.hpp"
#include "tripletrag/ingest.hpp"
#include "tripletrag/resolve.hpp"
#include "tripletrag/retrieve.hpp"

namespace testsup {

// Unique directory under the system temp root, removed on destruction.
class TempDir {
public:
    TempDir();
    ~TempDir();
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    const std::filesystem::path& path() const { return path_; }
    std::string str() const { return path_.string(); }
    std::string file(const std::string& name) const { return (path_ / name).string(); }

private:
    std::filesystem::path path_;
};

using Rng = std::mt19937_64;

int pick_int(Rng& rng, int lo, int hi);
double pick_real(Rng& rng, double lo, double hi);

// Gaussian components, L2-normalized.
std::vector<float> random_unit_vector(Rng& rng, std::size_t dim);

// `props` propositions spread over `chunks` chunks ("c0".."cN", assigned
// round-robin) with random unit embeddings.
tripletrag::TripletIndex random_index(Rng& rng, std::size_t props, std::size_t chunks,
                                      std::size_t dim);

// Full-scan reference for adaptive retrieval: every proposition scored
// at its max dot product over the queries, ranked (score desc, id asc),
// walked with the same stopping rule and exclusion filter. No pooling,
// no width management.
tripletrag::RetrievalResult oracle_retrieve(const tripletrag::TripletIndex& index,
                                            const std::vector<tripletrag::EmbeddingVector>& queries,
                                            std::size_t k,
                                            const std::set<std::string>* exclude = nullptr);

// Exhaustive reference for search_topn.
std::vector<tripletrag::ScoredProp> oracle_topn(const tripletrag::TripletIndex& index,
                                                const tripletrag::EmbeddingVector& query,
                                                std::size_t n);

// Two films, their directors, and a shared directors biography page.
std::vector<tripletrag::Document> film_corpus();

extern const char* const kFilmQuestion;
extern const char* const kFilmAnswer;

// The film corpus with every prompt of its resolution scripted: index
// extraction, decomposition, two resolve rounds, final answer. Built by
// stepping the real pipeline and scripting each prompt just before the
// step that issues it, so recorded bindings match byte for byte.
struct GoldenFixture {
    std::vector<tripletrag::Document> corpus;
    std::string question;
    std::string final_answer;
    tripletrag::ResolveConfig config;                 // k=2, max_rounds=3
    std::shared_ptr<tripletrag::MockBackend> backend; // strict, fully scripted
    tripletrag::TripletIndex index;
    std::vector<nlohmann::json> transcript_rows;      // file form of the script

    // Intermediate states recorded while authoring.
    tripletrag::ResolutionState state0;  // after decomposition
    tripletrag::ResolutionState state1;  // after round 1
    tripletrag::ResolutionState state2;  // after round 2, fully resolved
};

GoldenFixture make_golden_fixture();

void write_jsonl_file(const std::filesystem::path& path,
                      const std::vector<nlohmann::json>& rows);
void write_film_corpus_jsonl(const std::filesystem::path& path);

// Triplet over a small vocabulary; placeholder_rate is the chance each
// field independently becomes "?", "?a" or "?b".
tripletrag::Triplet random_triplet(Rng& rng, double placeholder_rate);

// Random update sequences checked against the state-update contract:
// resolved grows monotonically, searchable is replaced, fuzzy shrinks
// exactly by derivation, rounds count up, labels are not trusted.
// Throws std::runtime_error naming the violated invariant.
void run_state_update_trials(int sequences, std::uint64_t seed);

// Random small indexes and query sets; adaptive retrieval must equal the
// full-scan oracle exactly (ids, score bits, chunk order, exhaustion).
// Exercises k 1..5, widths from 1 to past the index size, 1..4 queries,
// and occasional chunk exclusions.
void run_retrieval_oracle_trials(int instances, std::uint64_t seed);

// Random documents (0..max_tokens tokens) chunked at random sizes and
// overlaps, checked against the stride contract: starts at multiples of
// (size - overlap) below the token count, spans clipped to the document,
// every token covered, text equal to the covered tokens re-joined.
void run_chunking_trials(int docs, std::size_t max_tokens, std::uint64_t seed);

}  // namespace testsup
