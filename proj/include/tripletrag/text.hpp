#pragma once
// Text primitives used everywhere: Unicode-whitespace segmentation,
// field normalization, and the FNV-1a hash that keys mock transcripts,
// feature-hash embeddings, and corpus digests.

#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace tripletrag {

// Byte range [begin, end) of one token inside the original text.
struct TokenSpan {
    std::size_t begin = 0;
    std::size_t end = 0;
};

// True for the fixed set of Unicode whitespace code points.
bool is_unicode_space(char32_t cp);

// Splits on runs of Unicode whitespace. Invalid UTF-8 bytes are treated
// as ordinary content so segmentation never fails.
std::vector<TokenSpan> tokenize_whitespace(std::string_view text);

// Trims surrounding whitespace and collapses interior runs to one ASCII
// space. Triplet fields compare equal iff their normalized forms do.
std::string normalize_ws(std::string_view text);

// Strips leading/trailing Unicode whitespace only; interior bytes stay
// untouched.
std::string_view trim_ws(std::string_view text);

std::string to_lower_ascii(std::string_view text);

bool starts_with_ci(std::string_view text, std::string_view prefix);

// FNV-1a, 64-bit. Stable across platforms by construction.
constexpr std::uint64_t kFnvOffset = 14695981039346656037ull;
constexpr std::uint64_t kFnvPrime = 1099511628211ull;

inline std::uint64_t fnv1a64(std::string_view bytes, std::uint64_t seed = kFnvOffset) {
    std::uint64_t h = seed;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= kFnvPrime;
    }
    return h;
}

std::string to_hex16(std::uint64_t value);

}  // namespace tripletrag
