#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "tripletrag/cli.hpp"

namespace {

void add_common_flags(CLI::App* cmd, tripletrag::RunConfig& config) {
    cmd->add_option("--k", config.k, "Unique source chunks per retrieval round")
        ->capture_default_str();
    cmd->add_option("--max-rounds", config.max_rounds, "Resolve-loop iteration cap")
        ->capture_default_str();
    cmd->add_option("--pool-mult", config.pool_mult,
                    "Initial candidate pool width as a multiple of k")
        ->capture_default_str();
    cmd->add_option("--backend", config.backend, "LLM backend")
        ->check(CLI::IsMember({"mock", "live"}))
        ->capture_default_str();
    cmd->add_option("--transcript", config.transcript,
                    "Mock: transcript JSONL to replay; live: record calls to this path");
    cmd->add_option("--endpoint", config.endpoint, "Live backend base URL")
        ->capture_default_str();
    cmd->add_option("--model", config.model, "Live backend model name")->capture_default_str();
    cmd->add_option("--embedding-model", config.embedding_model,
                    "Live embeddings model (defaults to --model)");
    cmd->add_option("--api-key-env", config.api_key_env,
                    "Environment variable holding the API key")
        ->capture_default_str();
    cmd->add_option("--workers", config.workers, "Worker threads for build/eval")
        ->capture_default_str();
    cmd->add_flag("--dedup-rounds", config.dedup_rounds,
                  "Exclude chunks retrieved in earlier rounds from later rounds");
    cmd->add_option("--mock-dim", config.mock_embedding_dim, "Mock embedding dimension")
        ->capture_default_str();
    cmd->add_option("--chunk-char-budget", config.chunk_char_budget,
                    "Per-passage character cap in the resolve prompt (0 = none)")
        ->capture_default_str();
    cmd->add_flag("--mechanical-substitution", config.mechanical_substitution,
                  "Also substitute named placeholders bound this round into fuzzy clues");
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Triplet-driven retrieval-augmented question answering"};
    app.require_subcommand(1);

    tripletrag::RunConfig config;

    // index
    auto* index_cmd = app.add_subcommand("index", "Build a vector index from a corpus");
    std::string corpus_path, out_dir, checkpoint_dir;
    bool prechunked = false;
    index_cmd->add_option("--corpus", corpus_path,
                          "Corpus JSONL ({\"doc_id\",\"title\",\"text\"})")
        ->required();
    index_cmd->add_option("--out", out_dir, "Output index directory")->required();
    index_cmd->add_flag("--prechunked", prechunked,
                        "Corpus rows are chunks ({\"chunk_id\",\"doc_id\",\"text\"})");
    index_cmd->add_option("--checkpoint", checkpoint_dir,
                          "Checkpoint directory (default <out>/.checkpoint; empty disables)");
    index_cmd->add_option("--chunk-size", config.chunk_size, "Chunk length in tokens")
        ->capture_default_str();
    index_cmd->add_option("--overlap", config.overlap, "Chunk overlap in tokens")
        ->capture_default_str();
    index_cmd->add_option("--tokenizer", config.tokenizer, "Registered tokenizer id")
        ->capture_default_str();
    index_cmd->add_flag("!--no-title", config.prepend_title,
                        "Do not prepend document titles to chunk text");
    index_cmd->add_option("--embed-batch", config.embed_batch, "Embedding batch size")
        ->capture_default_str();
    add_common_flags(index_cmd, config);

    // query
    auto* query_cmd = app.add_subcommand("query", "Answer one question against an index");
    std::string index_dir, question;
    std::vector<std::string> trace_args;
    query_cmd->add_option("--index", index_dir, "Index directory")->required();
    query_cmd->add_option("--question", question, "Question text")->required();
    auto* trace_opt = query_cmd->add_option("--trace", trace_args,
                                            "Stream round JSON lines to stderr or to PATH");
    trace_opt->expected(0, 1);
    add_common_flags(query_cmd, config);

    // eval
    auto* eval_cmd = app.add_subcommand("eval", "Score a QA dataset against an index");
    std::string eval_index_dir, dataset_path, eval_out_dir = ".";
    eval_cmd->add_option("--index", eval_index_dir, "Index directory")->required();
    eval_cmd->add_option("--dataset", dataset_path,
                         "Dataset JSONL ({\"id\",\"question\",\"answers\"})")
        ->required();
    eval_cmd->add_option("--out", eval_out_dir, "Report output directory")
        ->capture_default_str();
    eval_cmd->add_option("--fail-threshold", config.eval_fail_threshold,
                         "Errored-example fraction above which eval exits nonzero")
        ->capture_default_str();
    add_common_flags(eval_cmd, config);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? tripletrag::kExitOk : tripletrag::kExitUsage;
    }

    if (index_cmd->parsed()) {
        if (index_cmd->count("--checkpoint") == 0) {
            checkpoint_dir = out_dir + "/.checkpoint";
        }
        return tripletrag::cmd_index(corpus_path, prechunked, out_dir, checkpoint_dir, config,
                                     std::cout, std::cerr);
    }
    if (query_cmd->parsed()) {
        tripletrag::TraceTarget trace;
        trace.enabled = trace_opt->count() > 0;
        if (!trace_args.empty()) trace.path = trace_args.front();
        return tripletrag::cmd_query(index_dir, question, config, trace, std::cout, std::cerr);
    }
    return tripletrag::cmd_eval(eval_index_dir, dataset_path, eval_out_dir, config, std::cout,
                                std::cerr);
}
