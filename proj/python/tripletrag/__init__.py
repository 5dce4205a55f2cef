"""Triplet-driven retrieval-augmented question answering.

Thin re-export of the compiled core: offline index construction over a
document corpus and the online decompose / retrieve / resolve query loop,
plus the pure helpers (classification, parsing, chunking, QA metrics).
"""

from tripletrag._core import (
    GatewayError,
    Index,
    MockBackend,
    build_index,
    chunk_document,
    classify,
    count_placeholders,
    count_tokens,
    evaluate,
    exact_match,
    f1,
    normalize_answer,
    parse_decomposition,
    parse_resolution,
    run_query,
    search,
)

__all__ = [
    "GatewayError",
    "Index",
    "MockBackend",
    "build_index",
    "chunk_document",
    "classify",
    "count_placeholders",
    "count_tokens",
    "evaluate",
    "exact_match",
    "f1",
    "normalize_answer",
    "parse_decomposition",
    "parse_resolution",
    "run_query",
    "search",
]
