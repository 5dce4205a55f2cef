#pragma once
// Language-model access layer. Everything above this file talks to a
// Gateway; the Gateway renders templates, delegates to a pluggable
// backend, and meters token usage. Two backends ship: a scripted mock
// keyed by prompt fingerprints (tests, offline replay) and an HTTP
// client for chat-completions style endpoints.

#include <cstddef>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "tripletrag/prompts.hpp"
#include "tripletrag/usage.hpp"

namespace tripletrag {

using EmbeddingVector = std::vector<float>;

struct CompletionRequest {
    TemplateId template_id;
    Bindings bindings;
    std::string prompt;  // rendered template
    std::string phase;   // ledger phase label
};

struct CompletionResult {
    std::string text;
    // <= 0 means the backend could not report usage; the Gateway then
    // estimates from whitespace token counts and marks the entry.
    long input_tokens = -1;
    long output_tokens = -1;
};

class LlmBackend {
public:
    virtual ~LlmBackend() = default;
    virtual CompletionResult complete(const CompletionRequest& request) = 0;
    virtual EmbeddingVector embed(const std::string& text) = 0;
    virtual std::vector<EmbeddingVector> embed_batch(const std::vector<std::string>& texts);
};

// Deterministic embedding for tests and offline runs: tokens are
// feature-hashed into `dim` buckets, counted, and the count vector is
// L2-normalized. bucket() is exposed so tests can construct texts with
// known (non-)collisions.
class MockEmbedder {
public:
    explicit MockEmbedder(std::size_t dim = 256) : dim_(dim) {}
    std::size_t dim() const { return dim_; }
    std::size_t bucket(std::string_view token) const;
    EmbeddingVector embed(std::string_view text) const;

private:
    std::size_t dim_;
};

// Scripted backend. Responses are keyed by (template, fingerprint of the
// binding values); in strict mode an unknown key is an UnmatchedPrompt
// error so tests fail loudly instead of improvising.
class MockBackend : public LlmBackend {
public:
    explicit MockBackend(std::size_t embedding_dim = 256, bool strict = true)
        : embedder_(embedding_dim), strict_(strict) {}

    void add(TemplateId id, const Bindings& bindings, std::string response,
             long input_tokens = -1, long output_tokens = -1);
    void add_fingerprint(TemplateId id, const std::string& bindings_hash, std::string response,
                         long input_tokens = -1, long output_tokens = -1);

    // Transcript rows: {"template_id": str, "bindings_hash": str, "response": str,
    //                   "input_tokens": int, "output_tokens": int}; token counts are
    // optional (whitespace counts fill in) and "bindings" may replace
    // "bindings_hash" in hand-written files.
    void load_transcript(const std::string& path);
    static std::shared_ptr<MockBackend> from_jsonl(const std::string& path,
                                                   std::size_t embedding_dim = 256,
                                                   bool strict = true);

    CompletionResult complete(const CompletionRequest& request) override;
    EmbeddingVector embed(const std::string& text) override;

    const MockEmbedder& embedder() const { return embedder_; }
    std::vector<CompletionRequest> requests() const;
    std::optional<CompletionRequest> last_request(TemplateId id) const;

private:
    struct Scripted {
        std::string response;
        long input_tokens = -1;
        long output_tokens = -1;
    };

    MockEmbedder embedder_;
    bool strict_;
    std::map<std::pair<TemplateId, std::string>, Scripted> responses_;
    mutable std::mutex mutex_;
    std::vector<CompletionRequest> log_;
};

struct HttpConfig {
    std::string endpoint;         // e.g. http://localhost:8089 or http://host/v1
    std::string model;
    std::string embedding_model;  // empty: reuse `model`
    std::string api_key_env = "TRIPLETRAG_API_KEY";
    std::string chat_path = "/chat/completions";
    std::string embeddings_path = "/embeddings";
    int max_attempts = 3;         // total tries; only transport/5xx failures are retried
    int retry_base_ms = 250;      // doubled per retry; tests shrink it
    int timeout_seconds = 120;
    double temperature = 0.0;
};

// Chat-completions HTTP client. The key is read from the environment
// (config.api_key_env) at construction; it is never accepted as a flag
// and never echoed into errors or logs.
class HttpBackend : public LlmBackend {
public:
    explicit HttpBackend(HttpConfig config);

    CompletionResult complete(const CompletionRequest& request) override;
    EmbeddingVector embed(const std::string& text) override;
    std::vector<EmbeddingVector> embed_batch(const std::vector<std::string>& texts) override;

private:
    struct Response {
        int status = 0;
        std::string body;
    };
    Response post_with_retry(const std::string& path, const std::string& body);

    HttpConfig config_;
    std::string api_key_;
    std::string host_;
    int port_ = 80;
    std::string base_path_;  // prefix from the endpoint URL, no trailing slash
};

// Appends transcript rows (the MockBackend replay format) as completions
// happen, so a live run can later be replayed offline with identical
// responses and token accounting.
class TranscriptRecorder {
public:
    explicit TranscriptRecorder(std::string path);
    void record(const CompletionRequest& request, const std::string& response, long input_tokens,
                long output_tokens);

private:
    std::string path_;
    std::mutex mutex_;
};

// Per-run facade: template rendering + backend call + usage metering.
// Embeddings leave here unit-length regardless of backend. Thread safe;
// usage() aggregates across threads.
class Gateway {
public:
    explicit Gateway(std::shared_ptr<LlmBackend> backend,
                     std::shared_ptr<TranscriptRecorder> recorder = nullptr);

    std::string complete(TemplateId id, const Bindings& bindings, const std::string& phase);
    EmbeddingVector embed(const std::string& text);
    std::vector<EmbeddingVector> embed_batch(const std::vector<std::string>& texts);

    std::size_t embedding_dim() const;  // 0 until the first embedding returns
    const UsageLedger& usage() const { return ledger_; }
    LlmBackend& backend() { return *backend_; }

private:
    void check_dim(const EmbeddingVector& v);

    std::shared_ptr<LlmBackend> backend_;
    std::shared_ptr<TranscriptRecorder> recorder_;
    UsageLedger ledger_;
    mutable std::mutex mutex_;
    std::size_t embedding_dim_ = 0;
};

}  // namespace tripletrag
