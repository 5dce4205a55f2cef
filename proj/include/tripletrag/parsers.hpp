#pragma once
// Parsers for the two structured output grammars the prompts request:
// pipe-separated triple lines (decomposition, extraction) and the
// Subject/Predicate/Object clue blocks (resolution).

#include <string>
#include <string_view>
#include <vector>

#include "tripletrag/core.hpp"

namespace tripletrag {

// Every well-formed "subject | predicate | object" line, in order,
// duplicates preserved (callers dedup and may want the count). When a
// "Triples:" (or "Triple:") marker is present only lines after the first
// marker count; otherwise all lines are scanned. Never throws.
std::vector<Triplet> parse_triplet_lines(std::string_view text);

// parse_triplet_lines with exact duplicates removed, plus the
// decomposition contract: zero parseable triplets is a
// DecompositionError (callers fall back to whole-question search).
std::vector<Triplet> parse_decomposition(std::string_view text);

struct ResolutionParse {
    std::vector<Triplet> resolved;
    std::vector<Triplet> searchable;
    int skipped_blocks = 0;  // headers whose Subject/Predicate/Object never completed
};

// Scans for "Fully Resolved Clue n" / "Newly Searchable Clue n" blocks.
// Tolerates blank lines between fields; a block missing any field is
// skipped and counted. Empty output is legal (a no-progress round).
ResolutionParse parse_resolution(std::string_view text);

}  // namespace tripletrag
