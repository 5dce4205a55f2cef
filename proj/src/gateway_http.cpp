#include <chrono>
#include <cstdlib>
#include <thread>

#ifdef TRIPLETRAG_TLS
#define CPPHTTPLIB_OPENSSL_SUPPORT
#endif
#include <httplib.h>
#include <json.hpp>

#include "tripletrag/errors.hpp"
#include "tripletrag/gateway.hpp"

namespace tripletrag {

namespace {

std::string truncate_for_error(const std::string& body) {
    constexpr std::size_t kLimit = 300;
    if (body.size() <= kLimit) return body;
    return body.substr(0, kLimit) + "...";
}

bool looks_like_context_overflow(const std::string& body) {
    return body.find("context_length") != std::string::npos ||
           body.find("context length") != std::string::npos ||
           body.find("maximum context") != std::string::npos ||
           body.find("too many tokens") != std::string::npos;
}

}  // namespace

HttpBackend::HttpBackend(HttpConfig config) : config_(std::move(config)) {
    const std::string& url = config_.endpoint;
    std::size_t scheme_end = url.find("://");
    if (scheme_end == std::string::npos) {
        throw InputError("endpoint must be a http(s) URL: " + url);
    }
    std::string scheme = url.substr(0, scheme_end);
    if (scheme != "http" && scheme != "https") {
        throw InputError("unsupported endpoint scheme '" + scheme + "' in " + url);
    }
#ifndef TRIPLETRAG_TLS
    if (scheme == "https") {
        throw InputError("this build lacks TLS support; use an http endpoint");
    }
#endif
    std::size_t path_start = url.find('/', scheme_end + 3);
    std::string authority = url.substr(0, path_start);  // scheme://host[:port]
    host_ = authority;
    if (path_start != std::string::npos) {
        base_path_ = url.substr(path_start);
        while (!base_path_.empty() && base_path_.back() == '/') base_path_.pop_back();
    }
    if (const char* key = std::getenv(config_.api_key_env.c_str())) api_key_ = key;
}

HttpBackend::Response HttpBackend::post_with_retry(const std::string& path,
                                                   const std::string& body) {
    std::string last_failure;
    int attempts = config_.max_attempts < 1 ? 1 : config_.max_attempts;
    for (int attempt = 0; attempt < attempts; ++attempt) {
        if (attempt > 0) {
            auto delay = std::chrono::milliseconds(
                static_cast<long long>(config_.retry_base_ms) << (attempt - 1));
            std::this_thread::sleep_for(delay);
        }
        httplib::Client client(host_);
        client.set_connection_timeout(config_.timeout_seconds, 0);
        client.set_read_timeout(config_.timeout_seconds, 0);
        client.set_write_timeout(config_.timeout_seconds, 0);
        httplib::Headers headers;
        if (!api_key_.empty()) headers.emplace("Authorization", "Bearer " + api_key_);

        auto res = client.Post(base_path_ + path, headers, body, "application/json");
        if (!res) {
            last_failure = "transport error: " + httplib::to_string(res.error());
            continue;  // retryable
        }
        if (res->status == 401 || res->status == 403) {
            throw GatewayError(GatewayError::Kind::Auth, "gateway",
                               "authentication failed (HTTP " + std::to_string(res->status) +
                                   "); check the " + config_.api_key_env + " environment variable");
        }
        if (res->status >= 500) {
            last_failure = "HTTP " + std::to_string(res->status) + ": " +
                           truncate_for_error(res->body);
            continue;  // retryable
        }
        if (res->status >= 400) {
            if (looks_like_context_overflow(res->body)) {
                throw GatewayError(GatewayError::Kind::ContextLength, "gateway",
                                   "request exceeds the model context window: " +
                                       truncate_for_error(res->body));
            }
            throw GatewayError(GatewayError::Kind::BadResponse, "gateway",
                               "HTTP " + std::to_string(res->status) + ": " +
                                   truncate_for_error(res->body));
        }
        return Response{res->status, res->body};
    }
    throw GatewayError(GatewayError::Kind::Transport, "gateway",
                       "request failed after " + std::to_string(attempts) +
                           " attempts; last failure: " + last_failure);
}

CompletionResult HttpBackend::complete(const CompletionRequest& request) {
    nlohmann::json body;
    body["model"] = config_.model;
    body["messages"] = nlohmann::json::array({{{"role", "user"}, {"content", request.prompt}}});
    body["temperature"] = config_.temperature;

    Response response = post_with_retry(config_.chat_path, body.dump());

    nlohmann::json parsed = nlohmann::json::parse(response.body, nullptr, false);
    if (parsed.is_discarded() || !parsed.contains("choices") || !parsed["choices"].is_array() ||
        parsed["choices"].empty()) {
        throw GatewayError(GatewayError::Kind::BadResponse, request.phase,
                           "chat response missing choices: " + truncate_for_error(response.body));
    }
    const auto& first = parsed["choices"][0];
    if (!first.contains("message") || !first["message"].contains("content") ||
        !first["message"]["content"].is_string()) {
        throw GatewayError(GatewayError::Kind::BadResponse, request.phase,
                           "chat response missing message content: " +
                               truncate_for_error(response.body));
    }

    CompletionResult result;
    result.text = first["message"]["content"].get<std::string>();
    if (parsed.contains("usage") && parsed["usage"].is_object()) {
        const auto& usage = parsed["usage"];
        if (usage.contains("prompt_tokens") && usage["prompt_tokens"].is_number()) {
            result.input_tokens = usage["prompt_tokens"].get<long>();
        }
        if (usage.contains("completion_tokens") && usage["completion_tokens"].is_number()) {
            result.output_tokens = usage["completion_tokens"].get<long>();
        }
    }
    return result;
}

std::vector<EmbeddingVector> HttpBackend::embed_batch(const std::vector<std::string>& texts) {
    if (texts.empty()) return {};
    nlohmann::json body;
    body["model"] = config_.embedding_model.empty() ? config_.model : config_.embedding_model;
    body["input"] = texts;

    Response response = post_with_retry(config_.embeddings_path, body.dump());

    nlohmann::json parsed = nlohmann::json::parse(response.body, nullptr, false);
    if (parsed.is_discarded() || !parsed.contains("data") || !parsed["data"].is_array()) {
        throw GatewayError(GatewayError::Kind::BadResponse, "embed",
                           "embeddings response missing data: " + truncate_for_error(response.body));
    }
    std::vector<EmbeddingVector> out(texts.size());
    std::vector<bool> filled(texts.size(), false);
    for (const auto& item : parsed["data"]) {
        if (!item.contains("index") || !item.contains("embedding")) {
            throw GatewayError(GatewayError::Kind::BadResponse, "embed",
                               "embeddings item missing index or embedding");
        }
        std::size_t index = item["index"].get<std::size_t>();
        if (index >= out.size()) {
            throw GatewayError(GatewayError::Kind::BadResponse, "embed",
                               "embeddings item index out of range");
        }
        out[index] = item["embedding"].get<EmbeddingVector>();
        filled[index] = true;
    }
    for (std::size_t i = 0; i < filled.size(); ++i) {
        if (!filled[i]) {
            throw GatewayError(GatewayError::Kind::BadResponse, "embed",
                               "embeddings response left input " + std::to_string(i) + " unfilled");
        }
    }
    return out;
}

EmbeddingVector HttpBackend::embed(const std::string& text) {
    return embed_batch({text}).front();
}

}  // namespace tripletrag
