#include "tripletrag/index.hpp"

#include <algorithm>
#include <atomic>
#include <bit>
#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <set>
#include <thread>

#include <json.hpp>

#include "tripletrag/errors.hpp"
#include "tripletrag/jsonl.hpp"
#include "tripletrag/parsers.hpp"
#include "tripletrag/text.hpp"

namespace fs = std::filesystem;

namespace tripletrag {

namespace {

void append_u32le(std::string& out, std::uint32_t v) {
    out.push_back(static_cast<char>(v & 0xff));
    out.push_back(static_cast<char>((v >> 8) & 0xff));
    out.push_back(static_cast<char>((v >> 16) & 0xff));
    out.push_back(static_cast<char>((v >> 24) & 0xff));
}

std::uint32_t read_u32le(const char* p) {
    auto b = [&](int i) { return static_cast<std::uint32_t>(static_cast<unsigned char>(p[i])); };
    return b(0) | (b(1) << 8) | (b(2) << 16) | (b(3) << 24);
}

void append_f32le(std::string& out, float f) {
    append_u32le(out, std::bit_cast<std::uint32_t>(f));
}

float read_f32le(const char* p) { return std::bit_cast<float>(read_u32le(p)); }

std::string file_checksum(const std::string& bytes) { return to_hex16(fnv1a64(bytes)); }

// Rows become unit vectors; accumulation in double keeps the stored f32
// norm within 1e-6 of 1.
void normalize_rows(std::vector<float>& m, std::size_t rows, std::size_t dim) {
    for (std::size_t r = 0; r < rows; ++r) {
        float* row = m.data() + r * dim;
        double norm = 0.0;
        for (std::size_t c = 0; c < dim; ++c) norm += static_cast<double>(row[c]) * row[c];
        if (norm == 0.0) {
            throw GatewayError(GatewayError::Kind::BadResponse, "embed",
                               "embedding backend returned a zero vector for row " +
                                   std::to_string(r));
        }
        double inv = 1.0 / std::sqrt(norm);
        for (std::size_t c = 0; c < dim; ++c) row[c] = static_cast<float>(row[c] * inv);
    }
}

struct ChunkExtraction {
    std::vector<Triplet> triplets;
    std::size_t dropped_placeholder = 0;
    std::size_t dropped_duplicate = 0;
};

nlohmann::json extraction_row(const std::string& chunk_id, const ChunkExtraction& e) {
    nlohmann::json triplets = nlohmann::json::array();
    for (const auto& t : e.triplets) {
        triplets.push_back(nlohmann::json::array({t.subject, t.predicate, t.object}));
    }
    return nlohmann::json{{"chunk_id", chunk_id},
                          {"triplets", std::move(triplets)},
                          {"dropped_placeholder", e.dropped_placeholder},
                          {"dropped_duplicate", e.dropped_duplicate}};
}

// Completed extractions from a previous run; rows with a different
// corpus digest in the header invalidate the whole file.
std::map<std::string, ChunkExtraction> load_extraction_checkpoint(const std::string& path,
                                                                  const std::string& digest) {
    std::map<std::string, ChunkExtraction> done;
    if (!fs::exists(path)) return done;
    bool header_ok = false;
    for_each_jsonl(path, [&](const nlohmann::json& row, std::size_t) {
        if (row.contains("corpus_digest")) {
            header_ok = row.at("corpus_digest").get<std::string>() == digest;
            return;
        }
        if (!header_ok) return;
        ChunkExtraction e;
        for (const auto& t : row.at("triplets")) {
            e.triplets.push_back(Triplet{t.at(0).get<std::string>(), t.at(1).get<std::string>(),
                                         t.at(2).get<std::string>()});
        }
        e.dropped_placeholder = row.value("dropped_placeholder", 0u);
        e.dropped_duplicate = row.value("dropped_duplicate", 0u);
        done[row.at("chunk_id").get<std::string>()] = std::move(e);
    });
    if (!header_ok) done.clear();
    return done;
}

struct EmbedCheckpoint {
    std::string data_path;
    std::string state_path;
    std::string digest;

    // Returns previously embedded rows when the sidecar matches.
    std::vector<float> load(std::size_t& dim, std::size_t max_rows) const {
        if (!fs::exists(state_path) || !fs::exists(data_path)) return {};
        nlohmann::json state = nlohmann::json::parse(read_file(state_path), nullptr, false);
        if (state.is_discarded() || state.value("corpus_digest", "") != digest) return {};
        std::size_t rows = state.value("rows", 0u);
        std::size_t d = state.value("dim", 0u);
        if (d == 0 || rows == 0 || rows > max_rows) return {};
        std::string bytes = read_file(data_path);
        if (bytes.size() < rows * d * 4) return {};
        // The sidecar is authoritative; drop bytes past it (a crash can
        // land between the data append and the sidecar rewrite).
        if (bytes.size() > rows * d * 4) write_file(data_path, bytes.substr(0, rows * d * 4));
        std::vector<float> out(rows * d);
        for (std::size_t i = 0; i < out.size(); ++i) out[i] = read_f32le(bytes.data() + i * 4);
        dim = d;
        return out;
    }

    void append(const std::vector<float>& batch, std::size_t dim, std::size_t rows_total) const {
        std::string bytes;
        bytes.reserve(batch.size() * 4);
        for (float f : batch) append_f32le(bytes, f);
        std::ofstream out(data_path, rows_total * dim == batch.size()
                                         ? std::ios::binary | std::ios::trunc
                                         : std::ios::binary | std::ios::app);
        out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
        out.close();
        nlohmann::json state{{"corpus_digest", digest}, {"dim", dim}, {"rows", rows_total}};
        write_file(state_path, state.dump() + "\n");
    }
};

}  // namespace

TripletIndex::TripletIndex(std::vector<Proposition> propositions, std::vector<float> embeddings,
                           std::vector<Chunk> chunks, IndexMeta meta)
    : propositions_(std::move(propositions)),
      embeddings_(std::move(embeddings)),
      chunks_(std::move(chunks)),
      meta_(std::move(meta)) {
    meta_.proposition_count = propositions_.size();
    meta_.chunk_count = chunks_.size();
    if (embeddings_.size() != propositions_.size() * meta_.embedding_dim) {
        throw ContractViolation("embedding matrix size does not match count x dim");
    }
    for (std::size_t i = 0; i < chunks_.size(); ++i) {
        if (!chunk_by_id_.emplace(chunks_[i].chunk_id, i).second) {
            throw ContractViolation("duplicate chunk_id " + chunks_[i].chunk_id);
        }
    }
    for (std::size_t i = 0; i < propositions_.size(); ++i) {
        if (propositions_[i].prop_id != static_cast<std::int64_t>(i)) {
            throw ContractViolation("prop_id " + std::to_string(propositions_[i].prop_id) +
                                    " at row " + std::to_string(i));
        }
        if (!chunk_by_id_.count(propositions_[i].chunk_id)) {
            throw ContractViolation("proposition " + std::to_string(i) +
                                    " references unknown chunk " + propositions_[i].chunk_id);
        }
    }
}

const Proposition& TripletIndex::proposition(std::int64_t prop_id) const {
    if (prop_id < 0 || static_cast<std::size_t>(prop_id) >= propositions_.size()) {
        throw ContractViolation("prop_id out of range: " + std::to_string(prop_id));
    }
    return propositions_[static_cast<std::size_t>(prop_id)];
}

const float* TripletIndex::row(std::int64_t prop_id) const {
    if (prop_id < 0 || static_cast<std::size_t>(prop_id) >= propositions_.size()) {
        throw ContractViolation("prop_id out of range: " + std::to_string(prop_id));
    }
    return embeddings_.data() + static_cast<std::size_t>(prop_id) * meta_.embedding_dim;
}

const Chunk& TripletIndex::chunk(const std::string& chunk_id) const {
    auto it = chunk_by_id_.find(chunk_id);
    if (it == chunk_by_id_.end()) throw ContractViolation("unknown chunk_id " + chunk_id);
    return chunks_[it->second];
}

bool TripletIndex::has_chunk(const std::string& chunk_id) const {
    return chunk_by_id_.count(chunk_id) > 0;
}

std::string verbalize(const Triplet& t) {
    if (count_placeholders(t) != 0) {
        throw ContractViolation("cannot verbalize a triplet with placeholders: " + t.to_line());
    }
    return t.subject + " " + t.predicate + " " + t.object;
}

std::vector<Triplet> extract_triplets(Gateway& gateway, const Chunk& chunk,
                                      ExtractionStats* stats) {
    if (chunk.text.empty()) throw ContractViolation("extract_triplets on empty chunk");
    std::string response =
        gateway.complete(TemplateId::Extract, {{"passage", chunk.text}}, "extract");
    std::vector<Triplet> out;
    for (const auto& t : parse_triplet_lines(response)) {
        if (count_placeholders(t) != 0) {
            if (stats) ++stats->dropped_placeholder;
            continue;
        }
        if (std::find(out.begin(), out.end(), t) != out.end()) {
            if (stats) ++stats->dropped_duplicate;
            continue;
        }
        out.push_back(t);
    }
    return out;
}

std::string corpus_digest(const std::vector<Chunk>& chunks) {
    std::uint64_t h = kFnvOffset;
    for (const auto& c : chunks) {
        h = fnv1a64(c.chunk_id, h);
        h = fnv1a64(std::string_view("\x1f", 1), h);
        h = fnv1a64(c.text, h);
        h = fnv1a64(std::string_view("\x1e", 1), h);
    }
    return to_hex16(h);
}

std::string BuildStats::to_json() const {
    nlohmann::json j{{"chunks", chunks},
                     {"tokens", tokens},
                     {"extracted_triplets", extracted_triplets},
                     {"dropped_placeholder", dropped_placeholder},
                     {"dropped_duplicate", dropped_duplicate},
                     {"chunks_from_checkpoint", chunks_from_checkpoint}};
    return j.dump();
}

TripletIndex build_index(Gateway& gateway, const std::vector<Document>& corpus,
                         const BuildOptions& options, BuildStats* stats) {
    if (corpus.empty()) throw InputError("corpus is empty");
    std::vector<Chunk> chunks;
    for (const auto& doc : corpus) {
        auto doc_chunks = chunk_document(doc, options.chunking);
        chunks.insert(chunks.end(), doc_chunks.begin(), doc_chunks.end());
    }
    return build_index_from_chunks(gateway, chunks, options, stats);
}

TripletIndex build_index_from_chunks(Gateway& gateway, const std::vector<Chunk>& chunks,
                                     const BuildOptions& options, BuildStats* stats) {
    if (chunks.empty()) throw InputError("no chunks to index");
    const std::string digest = corpus_digest(chunks);

    BuildStats local;
    local.chunks = chunks.size();
    for (const auto& c : chunks) local.tokens += count_tokens(c.text, options.chunking.tokenizer_id);

    // Extraction, checkpointed per chunk and parallel across chunks.
    std::map<std::string, ChunkExtraction> done;
    std::string extraction_path;
    if (!options.checkpoint_dir.empty()) {
        fs::create_directories(options.checkpoint_dir);
        extraction_path = (fs::path(options.checkpoint_dir) / "extraction.jsonl").string();
        done = load_extraction_checkpoint(extraction_path, digest);
        local.chunks_from_checkpoint = done.size();
        if (done.empty()) {
            write_file(extraction_path,
                       nlohmann::json{{"corpus_digest", digest},
                                      {"extractor_version", kExtractorVersion}}
                               .dump() +
                           "\n");
        }
    }

    std::vector<std::size_t> pending;
    for (std::size_t i = 0; i < chunks.size(); ++i) {
        if (!done.count(chunks[i].chunk_id)) pending.push_back(i);
    }

    if (!pending.empty()) {
        std::mutex mutex;
        std::atomic<std::size_t> cursor{0};
        std::exception_ptr first_error;
        auto worker = [&]() {
            while (true) {
                std::size_t slot = cursor.fetch_add(1);
                if (slot >= pending.size()) return;
                {
                    std::lock_guard lock(mutex);
                    if (first_error) return;
                }
                const Chunk& chunk = chunks[pending[slot]];
                try {
                    ExtractionStats es;
                    ChunkExtraction e;
                    e.triplets = extract_triplets(gateway, chunk, &es);
                    e.dropped_placeholder = es.dropped_placeholder;
                    e.dropped_duplicate = es.dropped_duplicate;
                    std::lock_guard lock(mutex);
                    if (!extraction_path.empty()) {
                        std::ofstream out(extraction_path, std::ios::app);
                        out << extraction_row(chunk.chunk_id, e).dump() << '\n';
                    }
                    done[chunk.chunk_id] = std::move(e);
                } catch (...) {
                    std::lock_guard lock(mutex);
                    if (!first_error) first_error = std::current_exception();
                    return;
                }
            }
        };
        int n_workers = std::max(1, std::min<int>(options.workers,
                                                  static_cast<int>(pending.size())));
        std::vector<std::thread> threads;
        threads.reserve(static_cast<std::size_t>(n_workers));
        for (int i = 0; i < n_workers; ++i) threads.emplace_back(worker);
        for (auto& t : threads) t.join();
        if (first_error) std::rethrow_exception(first_error);
    }

    // Proposition assembly in chunk order keeps prop_ids deterministic.
    std::vector<Proposition> props;
    for (const auto& chunk : chunks) {
        const ChunkExtraction& e = done.at(chunk.chunk_id);
        local.dropped_placeholder += e.dropped_placeholder;
        local.dropped_duplicate += e.dropped_duplicate;
        for (const auto& t : e.triplets) {
            Proposition p;
            p.prop_id = static_cast<std::int64_t>(props.size());
            p.triplet = t;
            p.text = verbalize(t);
            p.chunk_id = chunk.chunk_id;
            props.push_back(std::move(p));
        }
    }
    local.extracted_triplets = props.size();

    // Embedding in fixed batches, checkpointed per batch.
    std::size_t dim = 0;
    std::vector<float> matrix;
    std::optional<EmbedCheckpoint> embed_ckpt;
    if (!options.checkpoint_dir.empty()) {
        embed_ckpt = EmbedCheckpoint{
            (fs::path(options.checkpoint_dir) / "embeddings.partial").string(),
            (fs::path(options.checkpoint_dir) / "embed_state.json").string(), digest};
        matrix = embed_ckpt->load(dim, props.size());
    }
    std::size_t rows_done = dim == 0 ? 0 : matrix.size() / dim;
    std::size_t batch_size = options.embed_batch == 0 ? 64 : options.embed_batch;
    while (rows_done < props.size()) {
        std::size_t end = std::min(rows_done + batch_size, props.size());
        std::vector<std::string> texts;
        texts.reserve(end - rows_done);
        for (std::size_t i = rows_done; i < end; ++i) texts.push_back(props[i].text);
        auto vectors = gateway.embed_batch(texts);
        std::vector<float> flat;
        for (const auto& v : vectors) {
            if (dim == 0) dim = v.size();
            flat.insert(flat.end(), v.begin(), v.end());
        }
        matrix.insert(matrix.end(), flat.begin(), flat.end());
        rows_done = end;
        if (embed_ckpt) embed_ckpt->append(flat, dim, rows_done);
    }
    if (!props.empty()) normalize_rows(matrix, props.size(), dim);

    IndexMeta meta;
    meta.embedding_dim = props.empty() ? 0 : dim;
    meta.tokenizer_id = options.chunking.tokenizer_id;
    meta.corpus_digest = digest;
    meta.chunk_size = options.chunking.chunk_size;
    meta.chunk_overlap = options.chunking.overlap;

    if (stats) *stats = local;
    return TripletIndex(std::move(props), std::move(matrix), chunks, std::move(meta));
}

void save_index(const TripletIndex& index, const std::string& directory) {
    fs::create_directories(directory);

    std::string props_bytes;
    for (const auto& p : index.propositions()) {
        nlohmann::json row{{"prop_id", p.prop_id},   {"subject", p.triplet.subject},
                           {"predicate", p.triplet.predicate}, {"object", p.triplet.object},
                           {"text", p.text},         {"chunk_id", p.chunk_id}};
        props_bytes += row.dump();
        props_bytes += '\n';
    }

    std::string chunks_bytes;
    for (const auto& c : index.chunks()) {
        nlohmann::json row{{"chunk_id", c.chunk_id}, {"doc_id", c.doc_id}, {"text", c.text}};
        chunks_bytes += row.dump();
        chunks_bytes += '\n';
    }

    std::string embed_bytes;
    embed_bytes.reserve(8 + index.size() * index.dim() * 4);
    append_u32le(embed_bytes, static_cast<std::uint32_t>(index.size()));
    append_u32le(embed_bytes, static_cast<std::uint32_t>(index.dim()));
    for (std::size_t r = 0; r < index.size(); ++r) {
        const float* row = index.row(static_cast<std::int64_t>(r));
        for (std::size_t c = 0; c < index.dim(); ++c) append_f32le(embed_bytes, row[c]);
    }

    const IndexMeta& m = index.meta();
    nlohmann::json meta{
        {"format_version", m.format_version},
        {"embedding_dim", m.embedding_dim},
        {"proposition_count", m.proposition_count},
        {"chunk_count", m.chunk_count},
        {"extractor_version", m.extractor_version},
        {"tokenizer_id", m.tokenizer_id},
        {"corpus_digest", m.corpus_digest},
        {"duplicates_merged", m.duplicates_merged},
        {"chunk_size", m.chunk_size},
        {"chunk_overlap", m.chunk_overlap},
        {"checksums",
         {{"propositions.jsonl", file_checksum(props_bytes)},
          {"chunks.jsonl", file_checksum(chunks_bytes)},
          {"embeddings.bin", file_checksum(embed_bytes)}}},
    };

    fs::path dir(directory);
    write_file((dir / "propositions.jsonl").string(), props_bytes);
    write_file((dir / "chunks.jsonl").string(), chunks_bytes);
    write_file((dir / "embeddings.bin").string(), embed_bytes);
    write_file((dir / "meta.json").string(), meta.dump(2) + "\n");
}

TripletIndex load_index(const std::string& directory) {
    fs::path dir(directory);
    nlohmann::json meta = nlohmann::json::parse(read_file((dir / "meta.json").string()), nullptr,
                                                false);
    if (meta.is_discarded()) throw IndexFormatError("meta.json is not valid JSON");

    int version = meta.value("format_version", -1);
    if (version != kIndexFormatVersion) {
        throw IndexFormatError("index format version " + std::to_string(version) +
                               " unsupported; this build reads version " +
                               std::to_string(kIndexFormatVersion));
    }

    std::string props_bytes = read_file((dir / "propositions.jsonl").string());
    std::string chunks_bytes = read_file((dir / "chunks.jsonl").string());
    std::string embed_bytes = read_file((dir / "embeddings.bin").string());

    if (meta.contains("checksums")) {
        const auto& sums = meta.at("checksums");
        auto check = [&](const char* name, const std::string& bytes) {
            std::string expected = sums.value(name, "");
            std::string actual = file_checksum(bytes);
            if (expected != actual) {
                throw IndexFormatError(std::string(name) + " checksum mismatch: expected " +
                                       expected + ", got " + actual);
            }
        };
        check("propositions.jsonl", props_bytes);
        check("chunks.jsonl", chunks_bytes);
        check("embeddings.bin", embed_bytes);
    }

    IndexMeta m;
    m.format_version = version;
    m.embedding_dim = meta.value("embedding_dim", 0u);
    m.proposition_count = meta.value("proposition_count", 0u);
    m.chunk_count = meta.value("chunk_count", 0u);
    m.extractor_version = meta.value("extractor_version", "");
    m.tokenizer_id = meta.value("tokenizer_id", "");
    m.corpus_digest = meta.value("corpus_digest", "");
    m.duplicates_merged = meta.value("duplicates_merged", false);
    m.chunk_size = meta.value("chunk_size", 0u);
    m.chunk_overlap = meta.value("chunk_overlap", 0u);

    std::vector<Proposition> props;
    for_each_jsonl_text(props_bytes, (dir / "propositions.jsonl").string(),
                        [&](const nlohmann::json& row, std::size_t) {
                            Proposition p;
                            p.prop_id = row.at("prop_id").get<std::int64_t>();
                            p.triplet.subject = row.at("subject").get<std::string>();
                            p.triplet.predicate = row.at("predicate").get<std::string>();
                            p.triplet.object = row.at("object").get<std::string>();
                            p.text = row.at("text").get<std::string>();
                            p.chunk_id = row.at("chunk_id").get<std::string>();
                            props.push_back(std::move(p));
                        });
    for (std::size_t i = 0; i < props.size(); ++i) {
        if (props[i].prop_id != static_cast<std::int64_t>(i)) {
            throw IndexFormatError("propositions.jsonl row " + std::to_string(i) +
                                   " has prop_id " + std::to_string(props[i].prop_id));
        }
    }
    if (props.size() != m.proposition_count) {
        throw IndexFormatError("meta proposition_count " + std::to_string(m.proposition_count) +
                               " but propositions.jsonl has " + std::to_string(props.size()) +
                               " rows");
    }

    std::vector<Chunk> chunks;
    std::set<std::string> chunk_ids;
    for_each_jsonl_text(chunks_bytes, (dir / "chunks.jsonl").string(),
                        [&](const nlohmann::json& row, std::size_t) {
                            Chunk c;
                            c.chunk_id = row.at("chunk_id").get<std::string>();
                            c.doc_id = row.at("doc_id").get<std::string>();
                            c.text = row.at("text").get<std::string>();
                            chunks.push_back(std::move(c));
                        });
    for (const auto& c : chunks) {
        if (!chunk_ids.insert(c.chunk_id).second) {
            throw IndexFormatError("duplicate chunk_id " + c.chunk_id + " in chunks.jsonl");
        }
    }
    if (chunks.size() != m.chunk_count) {
        throw IndexFormatError("meta chunk_count " + std::to_string(m.chunk_count) +
                               " but chunks.jsonl has " + std::to_string(chunks.size()) + " rows");
    }
    for (const auto& p : props) {
        if (!chunk_ids.count(p.chunk_id)) {
            throw IndexFormatError("proposition " + std::to_string(p.prop_id) +
                                   " references unknown chunk " + p.chunk_id);
        }
    }

    if (embed_bytes.size() < 8) throw IndexFormatError("embeddings.bin shorter than its header");
    std::uint32_t rows = read_u32le(embed_bytes.data());
    std::uint32_t dim = read_u32le(embed_bytes.data() + 4);
    if (rows != props.size()) {
        throw IndexFormatError("embeddings.bin row count " + std::to_string(rows) +
                               " does not match proposition count " +
                               std::to_string(props.size()));
    }
    if (dim != m.embedding_dim) {
        throw IndexFormatError("embeddings.bin dimension " + std::to_string(dim) +
                               " does not match meta embedding_dim " +
                               std::to_string(m.embedding_dim));
    }
    std::size_t expected_size = 8 + static_cast<std::size_t>(rows) * dim * 4;
    if (embed_bytes.size() != expected_size) {
        throw IndexFormatError("embeddings.bin is " + std::to_string(embed_bytes.size()) +
                               " bytes, expected " + std::to_string(expected_size));
    }
    std::vector<float> matrix(static_cast<std::size_t>(rows) * dim);
    for (std::size_t i = 0; i < matrix.size(); ++i) {
        matrix[i] = read_f32le(embed_bytes.data() + 8 + i * 4);
    }
    for (std::size_t r = 0; r < rows; ++r) {
        double norm = 0.0;
        for (std::size_t c = 0; c < dim; ++c) {
            double x = matrix[r * dim + c];
            norm += x * x;
        }
        if (std::abs(std::sqrt(norm) - 1.0) > 1e-4) {
            throw IndexFormatError("embedding row " + std::to_string(r) + " is not unit-norm");
        }
    }

    return TripletIndex(std::move(props), std::move(matrix), std::move(chunks), std::move(m));
}

}  // namespace tripletrag
