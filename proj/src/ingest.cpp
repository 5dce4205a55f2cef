#include "tripletrag/ingest.hpp"

#include <map>
#include <mutex>
#include <set>

#include "tripletrag/errors.hpp"
#include "tripletrag/jsonl.hpp"

namespace tripletrag {

namespace {

std::mutex g_registry_mutex;

std::map<std::string, TokenizerFn>& registry() {
    static std::map<std::string, TokenizerFn> reg{
        {"whitespace", [](std::string_view text) { return tokenize_whitespace(text); }},
    };
    return reg;
}

}  // namespace

void register_tokenizer(const std::string& id, TokenizerFn fn) {
    std::lock_guard lock(g_registry_mutex);
    registry()[id] = std::move(fn);
}

TokenizerFn get_tokenizer(const std::string& id) {
    std::lock_guard lock(g_registry_mutex);
    auto it = registry().find(id);
    if (it == registry().end()) throw InputError("unknown tokenizer '" + id + "'");
    return it->second;
}

std::size_t count_tokens(std::string_view text, const std::string& tokenizer_id) {
    return get_tokenizer(tokenizer_id)(text).size();
}

std::vector<Chunk> chunk_document(const Document& doc, const ChunkOptions& options) {
    if (options.chunk_size == 0 || options.overlap >= options.chunk_size)
        throw ContractViolation("chunking requires 0 <= overlap < chunk_size");

    const auto tokenizer = get_tokenizer(options.tokenizer_id);
    const auto tokens = tokenizer(doc.body);
    const std::size_t n = tokens.size();
    const std::size_t stride = options.chunk_size - options.overlap;

    std::vector<Chunk> chunks;
    std::size_t ordinal = 0;
    for (std::size_t start = 0; start < n; start += stride) {
        const std::size_t end = std::min(start + options.chunk_size, n);
        Chunk c;
        c.chunk_id = doc.doc_id + "#" + std::to_string(ordinal++);
        c.doc_id = doc.doc_id;
        c.token_begin = start;
        c.token_end = end;
        std::string text;
        if (options.prepend_title && !doc.title.empty()) {
            text = doc.title;
            text.push_back('\n');
        }
        for (std::size_t i = start; i < end; ++i) {
            if (i > start) text.push_back(' ');
            text.append(doc.body, tokens[i].begin, tokens[i].end - tokens[i].begin);
        }
        c.text = std::move(text);
        chunks.push_back(std::move(c));
    }
    return chunks;
}

std::vector<Document> load_corpus_jsonl(const std::string& path) {
    std::vector<Document> docs;
    std::set<std::string> seen;
    for_each_jsonl(path, [&](const nlohmann::json& obj, std::size_t line) {
        if (!obj.contains("doc_id") || !obj.contains("text"))
            throw InputError(path + ":" + std::to_string(line) +
                             ": corpus line needs doc_id and text");
        Document d;
        d.doc_id = obj.at("doc_id").get<std::string>();
        d.title = obj.value("title", std::string{});
        d.body = obj.at("text").get<std::string>();
        if (!seen.insert(d.doc_id).second)
            throw InputError(path + ":" + std::to_string(line) + ": duplicate doc_id '" +
                             d.doc_id + "'");
        docs.push_back(std::move(d));
    });
    return docs;
}

std::vector<Chunk> load_prechunked_jsonl(const std::string& path) {
    std::vector<Chunk> chunks;
    std::set<std::string> seen;
    for_each_jsonl(path, [&](const nlohmann::json& obj, std::size_t line) {
        if (!obj.contains("chunk_id") || !obj.contains("doc_id") || !obj.contains("text"))
            throw InputError(path + ":" + std::to_string(line) +
                             ": pre-chunked line needs chunk_id, doc_id, text");
        Chunk c;
        c.chunk_id = obj.at("chunk_id").get<std::string>();
        c.doc_id = obj.at("doc_id").get<std::string>();
        c.text = obj.at("text").get<std::string>();
        c.token_end = count_tokens(c.text);
        if (!seen.insert(c.chunk_id).second)
            throw InputError(path + ":" + std::to_string(line) + ": duplicate chunk_id '" +
                             c.chunk_id + "'");
        chunks.push_back(std::move(c));
    });
    return chunks;
}

}  // namespace tripletrag
