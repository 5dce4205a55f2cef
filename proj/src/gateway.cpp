#include "tripletrag/gateway.hpp"

#include <cmath>
#include <fstream>

#include <json.hpp>

#include "tripletrag/errors.hpp"
#include "tripletrag/ingest.hpp"
#include "tripletrag/jsonl.hpp"
#include "tripletrag/text.hpp"

namespace tripletrag {

std::vector<EmbeddingVector> LlmBackend::embed_batch(const std::vector<std::string>& texts) {
    std::vector<EmbeddingVector> out;
    out.reserve(texts.size());
    for (const auto& t : texts) out.push_back(embed(t));
    return out;
}

std::size_t MockEmbedder::bucket(std::string_view token) const {
    return static_cast<std::size_t>(fnv1a64(token)) % dim_;
}

EmbeddingVector MockEmbedder::embed(std::string_view text) const {
    EmbeddingVector v(dim_, 0.0f);
    for (const auto& span : tokenize_whitespace(text)) {
        v[bucket(text.substr(span.begin, span.end - span.begin))] += 1.0f;
    }
    double norm = 0.0;
    for (float x : v) norm += static_cast<double>(x) * x;
    if (norm > 0.0) {
        float inv = static_cast<float>(1.0 / std::sqrt(norm));
        for (float& x : v) x *= inv;
    }
    return v;
}

void MockBackend::add(TemplateId id, const Bindings& bindings, std::string response,
                      long input_tokens, long output_tokens) {
    add_fingerprint(id, bindings_fingerprint(bindings), std::move(response), input_tokens,
                    output_tokens);
}

void MockBackend::add_fingerprint(TemplateId id, const std::string& bindings_hash,
                                  std::string response, long input_tokens, long output_tokens) {
    std::lock_guard lock(mutex_);
    responses_[{id, bindings_hash}] = Scripted{std::move(response), input_tokens, output_tokens};
}

void MockBackend::load_transcript(const std::string& path) {
    for_each_jsonl(path, [&](const nlohmann::json& row, std::size_t line) {
        if (!row.contains("template_id") || !row.contains("response")) {
            throw InputError(path + ":" + std::to_string(line) +
                             ": transcript row needs \"template_id\" and \"response\"");
        }
        TemplateId id = template_from_name(row.at("template_id").get<std::string>());
        std::string hash;
        if (row.contains("bindings_hash")) {
            hash = row.at("bindings_hash").get<std::string>();
        } else if (row.contains("bindings")) {
            Bindings b;
            for (const auto& [k, v] : row.at("bindings").items()) b[k] = v.get<std::string>();
            hash = bindings_fingerprint(b);
        } else {
            throw InputError(path + ":" + std::to_string(line) +
                             ": transcript row needs \"bindings_hash\" or \"bindings\"");
        }
        add_fingerprint(id, hash, row.at("response").get<std::string>(),
                        row.value("input_tokens", -1L), row.value("output_tokens", -1L));
    });
}

std::shared_ptr<MockBackend> MockBackend::from_jsonl(const std::string& path,
                                                     std::size_t embedding_dim, bool strict) {
    auto backend = std::make_shared<MockBackend>(embedding_dim, strict);
    backend->load_transcript(path);
    return backend;
}

CompletionResult MockBackend::complete(const CompletionRequest& request) {
    std::string hash = bindings_fingerprint(request.bindings);
    Scripted scripted;
    {
        std::lock_guard lock(mutex_);
        log_.push_back(request);
        auto it = responses_.find({request.template_id, hash});
        if (it == responses_.end()) {
            if (strict_) {
                throw GatewayError(GatewayError::Kind::UnmatchedPrompt, request.phase,
                                   "no scripted response for template '" +
                                       std::string(template_name(request.template_id)) +
                                       "' bindings_hash " + hash);
            }
        } else {
            scripted = it->second;
        }
    }
    CompletionResult result;
    result.text = scripted.response;
    result.input_tokens = scripted.input_tokens >= 0 ? scripted.input_tokens
                                                     : static_cast<long>(count_tokens(request.prompt));
    result.output_tokens = scripted.output_tokens >= 0
                               ? scripted.output_tokens
                               : static_cast<long>(count_tokens(scripted.response));
    return result;
}

EmbeddingVector MockBackend::embed(const std::string& text) { return embedder_.embed(text); }

std::vector<CompletionRequest> MockBackend::requests() const {
    std::lock_guard lock(mutex_);
    return log_;
}

std::optional<CompletionRequest> MockBackend::last_request(TemplateId id) const {
    std::lock_guard lock(mutex_);
    for (auto it = log_.rbegin(); it != log_.rend(); ++it) {
        if (it->template_id == id) return *it;
    }
    return std::nullopt;
}

TranscriptRecorder::TranscriptRecorder(std::string path) : path_(std::move(path)) {
    std::ofstream out(path_, std::ios::trunc);  // start fresh per run
    if (!out) throw InputError("cannot open transcript file for writing: " + path_);
}

void TranscriptRecorder::record(const CompletionRequest& request, const std::string& response,
                                long input_tokens, long output_tokens) {
    nlohmann::json row;
    row["template_id"] = std::string(template_name(request.template_id));
    row["bindings_hash"] = bindings_fingerprint(request.bindings);
    row["response"] = response;
    row["input_tokens"] = input_tokens;
    row["output_tokens"] = output_tokens;
    std::lock_guard lock(mutex_);
    std::ofstream out(path_, std::ios::app);
    if (!out) throw InputError("cannot append to transcript file: " + path_);
    out << row.dump() << '\n';
}

Gateway::Gateway(std::shared_ptr<LlmBackend> backend, std::shared_ptr<TranscriptRecorder> recorder)
    : backend_(std::move(backend)), recorder_(std::move(recorder)) {
    if (!backend_) throw ContractViolation("Gateway requires a backend");
}

std::string Gateway::complete(TemplateId id, const Bindings& bindings, const std::string& phase) {
    CompletionRequest request;
    request.template_id = id;
    request.bindings = bindings;
    request.prompt = render_prompt(id, bindings);
    request.phase = phase;

    CompletionResult result = backend_->complete(request);

    UsageEntry entry;
    entry.phase = phase;
    entry.estimated = result.input_tokens < 0 || result.output_tokens < 0;
    entry.input_tokens =
        result.input_tokens >= 0 ? result.input_tokens : static_cast<long>(count_tokens(request.prompt));
    entry.output_tokens =
        result.output_tokens >= 0 ? result.output_tokens : static_cast<long>(count_tokens(result.text));
    ledger_.add(entry);

    if (recorder_) recorder_->record(request, result.text, entry.input_tokens, entry.output_tokens);
    return result.text;
}

void Gateway::check_dim(const EmbeddingVector& v) {
    if (v.empty()) {
        throw GatewayError(GatewayError::Kind::BadResponse, "embed", "backend returned an empty embedding");
    }
    std::lock_guard lock(mutex_);
    if (embedding_dim_ == 0) {
        embedding_dim_ = v.size();
    } else if (embedding_dim_ != v.size()) {
        throw GatewayError(GatewayError::Kind::BadResponse, "embed",
                           "embedding dimension changed from " + std::to_string(embedding_dim_) +
                               " to " + std::to_string(v.size()));
    }
}

namespace {

// Backends are not trusted to return unit vectors, and max-score pooling
// across queries is only meaningful when every query has norm 1.
void normalize_unit(EmbeddingVector& v) {
    double norm = 0.0;
    for (float x : v) norm += static_cast<double>(x) * x;
    if (norm == 0.0) return;
    const float inv = static_cast<float>(1.0 / std::sqrt(norm));
    for (float& x : v) x *= inv;
}

}  // namespace

EmbeddingVector Gateway::embed(const std::string& text) {
    EmbeddingVector v = backend_->embed(text);
    check_dim(v);
    normalize_unit(v);
    return v;
}

std::vector<EmbeddingVector> Gateway::embed_batch(const std::vector<std::string>& texts) {
    std::vector<EmbeddingVector> out = backend_->embed_batch(texts);
    if (out.size() != texts.size()) {
        throw GatewayError(GatewayError::Kind::BadResponse, "embed",
                           "batch embedding returned " + std::to_string(out.size()) +
                               " vectors for " + std::to_string(texts.size()) + " inputs");
    }
    for (auto& v : out) {
        check_dim(v);
        normalize_unit(v);
    }
    return out;
}

std::size_t Gateway::embedding_dim() const {
    std::lock_guard lock(mutex_);
    return embedding_dim_;
}

}  // namespace tripletrag
