#include "tripletrag/text.hpp"

#include <cctype>

namespace tripletrag {

bool is_unicode_space(char32_t cp) {
    switch (cp) {
        case 0x09: case 0x0A: case 0x0B: case 0x0C: case 0x0D:
        case 0x20: case 0x85: case 0xA0:
        case 0x1680:
        case 0x2000: case 0x2001: case 0x2002: case 0x2003: case 0x2004:
        case 0x2005: case 0x2006: case 0x2007: case 0x2008: case 0x2009:
        case 0x200A:
        case 0x2028: case 0x2029: case 0x202F: case 0x205F:
        case 0x3000:
            return true;
        default:
            return false;
    }
}

namespace {

// Decodes one UTF-8 code point at `pos`; on malformed input consumes a
// single byte and reports it as a non-space sentinel.
char32_t decode_utf8(std::string_view text, std::size_t pos, std::size_t& len) {
    const auto b0 = static_cast<unsigned char>(text[pos]);
    len = 1;
    if (b0 < 0x80) return b0;

    int extra = 0;
    char32_t cp = 0;
    if ((b0 & 0xE0) == 0xC0) { extra = 1; cp = b0 & 0x1F; }
    else if ((b0 & 0xF0) == 0xE0) { extra = 2; cp = b0 & 0x0F; }
    else if ((b0 & 0xF8) == 0xF0) { extra = 3; cp = b0 & 0x07; }
    else return 0xFFFD;

    if (pos + static_cast<std::size_t>(extra) >= text.size()) return 0xFFFD;
    for (int i = 1; i <= extra; ++i) {
        const auto b = static_cast<unsigned char>(text[pos + i]);
        if ((b & 0xC0) != 0x80) return 0xFFFD;
        cp = (cp << 6) | (b & 0x3F);
    }
    len = static_cast<std::size_t>(extra) + 1;
    return cp;
}

}  // namespace

std::vector<TokenSpan> tokenize_whitespace(std::string_view text) {
    std::vector<TokenSpan> out;
    std::size_t pos = 0;
    std::size_t token_begin = std::string_view::npos;
    while (pos < text.size()) {
        std::size_t len = 1;
        const char32_t cp = decode_utf8(text, pos, len);
        if (is_unicode_space(cp)) {
            if (token_begin != std::string_view::npos) {
                out.push_back({token_begin, pos});
                token_begin = std::string_view::npos;
            }
        } else if (token_begin == std::string_view::npos) {
            token_begin = pos;
        }
        pos += len;
    }
    if (token_begin != std::string_view::npos) out.push_back({token_begin, text.size()});
    return out;
}

std::string normalize_ws(std::string_view text) {
    const auto spans = tokenize_whitespace(text);
    std::string out;
    out.reserve(text.size());
    for (std::size_t i = 0; i < spans.size(); ++i) {
        if (i > 0) out.push_back(' ');
        out.append(text.substr(spans[i].begin, spans[i].end - spans[i].begin));
    }
    return out;
}

std::string_view trim_ws(std::string_view text) {
    const auto spans = tokenize_whitespace(text);
    if (spans.empty()) return {};
    return text.substr(spans.front().begin, spans.back().end - spans.front().begin);
}

std::string to_lower_ascii(std::string_view text) {
    std::string out(text);
    for (char& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    return out;
}

bool starts_with_ci(std::string_view text, std::string_view prefix) {
    if (text.size() < prefix.size()) return false;
    for (std::size_t i = 0; i < prefix.size(); ++i) {
        if (std::tolower(static_cast<unsigned char>(text[i])) !=
            std::tolower(static_cast<unsigned char>(prefix[i])))
            return false;
    }
    return true;
}

std::string to_hex16(std::uint64_t value) {
    static constexpr char digits[] = "0123456789abcdef";
    std::string out(16, '0');
    for (int i = 15; i >= 0; --i) {
        out[static_cast<std::size_t>(i)] = digits[value & 0xF];
        value >>= 4;
    }
    return out;
}

}  // namespace tripletrag
