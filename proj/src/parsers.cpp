#include "tripletrag/parsers.hpp"

#include <algorithm>
#include <cctype>

#include "tripletrag/errors.hpp"
#include "tripletrag/text.hpp"

namespace tripletrag {

namespace {

std::vector<std::string_view> split_lines(std::string_view text) {
    std::vector<std::string_view> lines;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        std::size_t nl = text.find('\n', pos);
        if (nl == std::string_view::npos) {
            lines.push_back(text.substr(pos));
            break;
        }
        lines.push_back(text.substr(pos, nl - pos));
        pos = nl + 1;
    }
    for (auto& line : lines) {
        if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    }
    return lines;
}

std::string_view trim_view(std::string_view s) {
    std::size_t b = 0;
    std::size_t e = s.size();
    while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
    while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
    return s.substr(b, e - b);
}

// A triple line has exactly two pipes and three non-empty fields.
bool try_parse_triplet_line(std::string_view line, Triplet& out) {
    if (std::count(line.begin(), line.end(), '|') != 2) return false;
    std::size_t first = line.find('|');
    std::size_t second = line.find('|', first + 1);
    auto t = Triplet::try_make(std::string(trim_view(line.substr(0, first))),
                               std::string(trim_view(line.substr(first + 1, second - first - 1))),
                               std::string(trim_view(line.substr(second + 1))));
    if (!t) return false;
    out = *t;
    return true;
}

bool is_triples_marker(std::string_view line) {
    auto t = trim_view(line);
    return t == "Triples:" || t == "Triple:" || t == "Triples" ||
           t == "**Triples:**" || t == "Triples：";
}

void push_unique(std::vector<Triplet>& v, const Triplet& t) {
    if (std::find(v.begin(), v.end(), t) == v.end()) v.push_back(t);
}

// Matches "Fully Resolved Clue", "Newly Searchable Clue" and close
// variants ("Clue 1:", "**Fully Resolved Clue 2**", trailing colon), and
// reports which list the block belongs to.
enum class BlockKind { None, Resolved, Searchable };

BlockKind block_header(std::string_view line) {
    std::string lowered = to_lower_ascii(std::string(trim_view(line)));
    std::erase_if(lowered, [](char c) { return c == '*' || c == '#'; });
    std::string_view v = trim_view(lowered);
    bool resolved = v.find("fully resolved clue") != std::string_view::npos ||
                    v.find("resolved clue") == 0;
    bool searchable = v.find("newly searchable clue") != std::string_view::npos ||
                      v.find("searchable clue") == 0;
    if (resolved) return BlockKind::Resolved;
    if (searchable) return BlockKind::Searchable;
    return BlockKind::None;
}

// "Subject: X" style field line; label match is case-insensitive and
// tolerates leading list markers ("- Subject: X").
bool field_line(std::string_view line, std::string_view label, std::string& out) {
    std::string_view v = trim_view(line);
    while (!v.empty() && (v.front() == '-' || v.front() == '*')) v = trim_view(v.substr(1));
    if (v.size() < label.size() + 1) return false;
    if (!starts_with_ci(v, label)) return false;
    v.remove_prefix(label.size());
    v = trim_view(v);
    if (v.empty() || v.front() != ':') return false;
    out = std::string(trim_view(v.substr(1)));
    return true;
}

}  // namespace

std::vector<Triplet> parse_triplet_lines(std::string_view text) {
    auto lines = split_lines(text);
    std::size_t begin = 0;
    for (std::size_t i = 0; i < lines.size(); ++i) {
        if (is_triples_marker(lines[i])) {
            begin = i + 1;
            break;
        }
    }
    std::vector<Triplet> out;
    Triplet t;
    for (std::size_t i = begin; i < lines.size(); ++i) {
        if (try_parse_triplet_line(lines[i], t)) out.push_back(t);
    }
    return out;
}

std::vector<Triplet> parse_decomposition(std::string_view text) {
    std::vector<Triplet> out;
    for (const auto& t : parse_triplet_lines(text)) push_unique(out, t);
    if (out.empty()) {
        throw DecompositionError("decomposition output contained no subject | predicate | object lines");
    }
    return out;
}

ResolutionParse parse_resolution(std::string_view text) {
    ResolutionParse result;
    auto lines = split_lines(text);

    BlockKind kind = BlockKind::None;
    std::string subject, predicate, object;
    bool have_s = false, have_p = false, have_o = false;

    auto flush = [&](BlockKind next) {
        if (kind != BlockKind::None) {
            if (have_s && have_p && have_o) {
                auto t = Triplet::try_make(subject, predicate, object);
                if (t) {
                    auto& dest = kind == BlockKind::Resolved ? result.resolved : result.searchable;
                    push_unique(dest, *t);
                } else {
                    ++result.skipped_blocks;
                }
            } else {
                ++result.skipped_blocks;
            }
        }
        kind = next;
        subject.clear();
        predicate.clear();
        object.clear();
        have_s = have_p = have_o = false;
    };

    for (const auto& line : lines) {
        BlockKind header = block_header(line);
        if (header != BlockKind::None) {
            flush(header);
            continue;
        }
        if (kind == BlockKind::None) continue;
        std::string value;
        if (field_line(line, "subject", value)) {
            subject = std::move(value);
            have_s = true;
        } else if (field_line(line, "predicate", value)) {
            predicate = std::move(value);
            have_p = true;
        } else if (field_line(line, "object", value)) {
            object = std::move(value);
            have_o = true;
        }
        // Other text inside a block (explanations, blank lines) is ignored.
    }
    flush(BlockKind::None);
    return result;
}

}  // namespace tripletrag
