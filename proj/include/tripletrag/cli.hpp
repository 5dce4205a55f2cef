#pragma once
// Command implementations behind the executable: index building, single
// queries with trace streaming, and dataset evaluation. They are plain
// functions over streams so tests can drive them in-process.

#include <iosfwd>
#include <memory>
#include <string>

#include "json.hpp"

#include "tripletrag/eval.hpp"
#include "tripletrag/gateway.hpp"
#include "tripletrag/resolve.hpp"

namespace tripletrag {

// Exit codes shared by every command.
inline constexpr int kExitOk = 0;
inline constexpr int kExitRuntime = 1;  // query/gateway/eval failures
inline constexpr int kExitUsage = 2;    // bad flags, unreadable inputs

struct RunConfig {
    std::size_t k = 5;
    int max_rounds = 3;
    std::size_t chunk_size = 1200;
    std::size_t overlap = 100;
    std::size_t pool_mult = 8;  // pool width = pool_mult * k
    std::string backend = "mock";
    std::string transcript;  // mock: replay source; live: recording target
    std::string endpoint = "http://localhost:8080/v1";
    std::string model = "default";
    std::string embedding_model;
    std::string api_key_env = "TRIPLETRAG_API_KEY";
    int workers = 4;
    bool dedup_rounds = false;
    bool prepend_title = true;
    std::string tokenizer = "whitespace";
    std::size_t mock_embedding_dim = 256;
    std::size_t embed_batch = 64;
    std::size_t chunk_char_budget = 0;
    bool mechanical_substitution = false;
    double eval_fail_threshold = 0.5;  // error fraction above which eval exits 1

    ResolveConfig resolve_config() const;
    // Everything except secrets (the API key is an env var name only).
    nlohmann::json to_json() const;
};

struct BackendBundle {
    std::shared_ptr<LlmBackend> backend;
    std::shared_ptr<TranscriptRecorder> recorder;  // live + --transcript only
};

// Validates backend selection and wires transcripts. Throws InputError
// for unusable configuration.
BackendBundle make_backend(const RunConfig& config);

std::unique_ptr<Gateway> make_gateway(const BackendBundle& bundle);

// `trace_target`: unset = no trace; empty string = stream to `err`;
// otherwise a file path.
struct TraceTarget {
    bool enabled = false;
    std::string path;  // empty: stderr
};

int cmd_index(const std::string& corpus_path, bool prechunked, const std::string& out_dir,
              const std::string& checkpoint_dir, const RunConfig& config, std::ostream& out,
              std::ostream& err);

int cmd_query(const std::string& index_dir, const std::string& question, const RunConfig& config,
              const TraceTarget& trace, std::ostream& out, std::ostream& err);

int cmd_eval(const std::string& index_dir, const std::string& dataset_path,
             const std::string& out_dir, const RunConfig& config, std::ostream& out,
             std::ostream& err);

}  // namespace tripletrag
