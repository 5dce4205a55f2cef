#pragma once
// Corpus loading and fixed-length token chunking with overlap.
//
// Token counting defaults to Unicode-whitespace segmentation, which keeps
// chunk boundaries deterministic and dependency-free. A registry hook
// allows swapping in a model tokenizer when bit-parity with a deployment
// matters; only chunk boundaries change, not behavior downstream.

#include <cstddef>
#include <functional>
#include <string>
#include <string_view>
#include <vector>

#include "tripletrag/text.hpp"

namespace tripletrag {

struct Document {
    std::string doc_id;
    std::string title;
    std::string body;
};

struct Chunk {
    std::string chunk_id;  // "<doc_id>#<ordinal>"
    std::string doc_id;
    std::string text;
    std::size_t token_begin = 0;  // token offsets into the document body
    std::size_t token_end = 0;
};

using TokenizerFn = std::function<std::vector<TokenSpan>(std::string_view)>;

// Registry of tokenizers; "whitespace" is built in and the default.
void register_tokenizer(const std::string& id, TokenizerFn fn);
TokenizerFn get_tokenizer(const std::string& id);  // throws InputError on unknown id

std::size_t count_tokens(std::string_view text, const std::string& tokenizer_id = "whitespace");

struct ChunkOptions {
    std::size_t chunk_size = 1200;
    std::size_t overlap = 100;
    bool prepend_title = true;  // "title\n" ahead of each chunk's text
    std::string tokenizer_id = "whitespace";
};

// Splits the document body into chunks of at most chunk_size tokens,
// starting at stride (chunk_size - overlap) offsets, covering every token.
// Chunk text is the covered tokens joined by single spaces. Throws
// ContractViolation when overlap >= chunk_size.
std::vector<Chunk> chunk_document(const Document& doc, const ChunkOptions& options = {});

// JSONL loaders. Corpus lines: {"doc_id", "title", "text"} (title optional).
// Pre-chunked lines: {"chunk_id", "doc_id", "text"} for corpora that ship
// expert splits; these bypass chunk_document entirely.
std::vector<Document> load_corpus_jsonl(const std::string& path);
std::vector<Chunk> load_prechunked_jsonl(const std::string& path);

}  // namespace tripletrag
