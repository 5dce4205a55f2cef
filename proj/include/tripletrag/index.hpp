#pragma once
// Offline stage: triplet extraction over chunks, proposition embedding,
// and the flat vector index with its proposition -> source-chunk map.
// Search is an exact scan over the dense matrix; corpora in scope stay
// well under a million rows, where a scan is fast and keeps retrieval
// tests exact.

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "tripletrag/core.hpp"
#include "tripletrag/gateway.hpp"
#include "tripletrag/ingest.hpp"

namespace tripletrag {

inline constexpr int kIndexFormatVersion = 1;
inline constexpr const char* kExtractorVersion = "openie-v1";

struct Proposition {
    std::int64_t prop_id = -1;
    Triplet triplet;
    std::string text;  // verbalized triplet, the embedded string
    std::string chunk_id;
};

struct IndexMeta {
    int format_version = kIndexFormatVersion;
    std::size_t embedding_dim = 0;
    std::size_t proposition_count = 0;
    std::size_t chunk_count = 0;
    std::string extractor_version = kExtractorVersion;
    std::string tokenizer_id = "whitespace";
    std::string corpus_digest;       // fnv1a64 over chunk ids + texts, hex
    bool duplicates_merged = false;  // same fact in two chunks stays two rows
    std::size_t chunk_size = 0;
    std::size_t chunk_overlap = 0;
};

// Immutable after construction. Row r of the embedding matrix belongs to
// prop_id r; rows are unit-norm.
class TripletIndex {
public:
    TripletIndex() = default;
    TripletIndex(std::vector<Proposition> propositions, std::vector<float> embeddings,
                 std::vector<Chunk> chunks, IndexMeta meta);

    const std::vector<Proposition>& propositions() const { return propositions_; }
    const Proposition& proposition(std::int64_t prop_id) const;
    const float* row(std::int64_t prop_id) const;
    std::size_t size() const { return propositions_.size(); }
    std::size_t dim() const { return meta_.embedding_dim; }

    const std::vector<Chunk>& chunks() const { return chunks_; }
    const Chunk& chunk(const std::string& chunk_id) const;
    bool has_chunk(const std::string& chunk_id) const;

    const IndexMeta& meta() const { return meta_; }

private:
    std::vector<Proposition> propositions_;
    std::vector<float> embeddings_;  // row-major, size = count * dim
    std::vector<Chunk> chunks_;
    std::map<std::string, std::size_t> chunk_by_id_;
    IndexMeta meta_;
};

// "subject predicate object" with single spaces. Placeholder fields are
// a contract violation; query-side verbalization lives in retrieve.
std::string verbalize(const Triplet& t);

struct ExtractionStats {
    std::size_t dropped_placeholder = 0;
    std::size_t dropped_duplicate = 0;
};

// One extraction call for one chunk. Placeholder-bearing triplets are
// dropped, duplicates within the chunk removed; an unparseable response
// is an empty list, not an error.
std::vector<Triplet> extract_triplets(Gateway& gateway, const Chunk& chunk,
                                      ExtractionStats* stats = nullptr);

struct BuildOptions {
    ChunkOptions chunking;
    std::size_t embed_batch = 64;
    int workers = 4;
    // When set, completed chunk extractions and embedding batches are
    // persisted here so an aborted build resumes instead of re-spending
    // tokens. Keyed by the corpus digest; a stale checkpoint is ignored.
    std::string checkpoint_dir;
};

struct BuildStats {
    std::size_t chunks = 0;
    std::size_t tokens = 0;  // corpus tokens across chunks
    std::size_t extracted_triplets = 0;
    std::size_t dropped_placeholder = 0;
    std::size_t dropped_duplicate = 0;
    std::size_t chunks_from_checkpoint = 0;
    std::string to_json() const;
};

std::string corpus_digest(const std::vector<Chunk>& chunks);

TripletIndex build_index(Gateway& gateway, const std::vector<Document>& corpus,
                         const BuildOptions& options = {}, BuildStats* stats = nullptr);

// Same pipeline starting from caller-provided chunks (pre-chunked
// corpora skip the chunker).
TripletIndex build_index_from_chunks(Gateway& gateway, const std::vector<Chunk>& chunks,
                                     const BuildOptions& options = {}, BuildStats* stats = nullptr);

// Directory layout: meta.json, propositions.jsonl, chunks.jsonl,
// embeddings.bin (8-byte header: u32 row count, u32 dim, little-endian;
// then row-major f32). save is deterministic byte-for-byte given the
// same index. load validates version, checksums, counts, dim, and row
// norms, throwing IndexFormatError on any mismatch.
void save_index(const TripletIndex& index, const std::string& directory);
TripletIndex load_index(const std::string& directory);

}  // namespace tripletrag
