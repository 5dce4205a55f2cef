#include "tripletrag/cli.hpp"

#include <filesystem>
#include <fstream>
#include <functional>
#include <iomanip>
#include <ostream>
#include <sstream>

#include "tripletrag/errors.hpp"
#include "tripletrag/index.hpp"
#include "tripletrag/jsonl.hpp"

namespace fs = std::filesystem;

namespace tripletrag {

namespace {

// One catch policy for all commands: bad inputs exit 2, runtime faults 1.
int run_guarded(std::ostream& err, const std::function<int()>& body) {
    try {
        return body();
    } catch (const InputError& e) {
        err << "error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const IndexFormatError& e) {
        err << "error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return kExitRuntime;
    }
}

}  // namespace

ResolveConfig RunConfig::resolve_config() const {
    ResolveConfig rc;
    rc.k = k;
    rc.max_rounds = max_rounds;
    rc.pool_width = pool_mult * k;
    rc.dedup_rounds = dedup_rounds;
    rc.chunk_char_budget = chunk_char_budget;
    rc.mechanical_substitution = mechanical_substitution;
    return rc;
}

nlohmann::json RunConfig::to_json() const {
    return nlohmann::json{{"k", k},
                          {"max_rounds", max_rounds},
                          {"chunk_size", chunk_size},
                          {"overlap", overlap},
                          {"pool_mult", pool_mult},
                          {"backend", backend},
                          {"transcript", transcript},
                          {"endpoint", backend == "live" ? endpoint : ""},
                          {"model", backend == "live" ? model : ""},
                          {"embedding_model", embedding_model},
                          {"api_key_env", api_key_env},
                          {"workers", workers},
                          {"dedup_rounds", dedup_rounds},
                          {"prepend_title", prepend_title},
                          {"tokenizer", tokenizer},
                          {"mock_embedding_dim", mock_embedding_dim},
                          {"embed_batch", embed_batch},
                          {"chunk_char_budget", chunk_char_budget},
                          {"mechanical_substitution", mechanical_substitution}};
}

BackendBundle make_backend(const RunConfig& config) {
    BackendBundle bundle;
    if (config.backend == "mock") {
        auto mock = std::make_shared<MockBackend>(config.mock_embedding_dim, /*strict=*/true);
        if (!config.transcript.empty()) mock->load_transcript(config.transcript);
        bundle.backend = std::move(mock);
    } else if (config.backend == "live") {
        HttpConfig http;
        http.endpoint = config.endpoint;
        http.model = config.model;
        http.embedding_model = config.embedding_model;
        http.api_key_env = config.api_key_env;
        bundle.backend = std::make_shared<HttpBackend>(http);
        if (!config.transcript.empty()) {
            bundle.recorder = std::make_shared<TranscriptRecorder>(config.transcript);
        }
    } else {
        throw InputError("unknown backend '" + config.backend + "' (expected mock or live)");
    }
    return bundle;
}

std::unique_ptr<Gateway> make_gateway(const BackendBundle& bundle) {
    return std::make_unique<Gateway>(bundle.backend, bundle.recorder);
}

int cmd_index(const std::string& corpus_path, bool prechunked, const std::string& out_dir,
              const std::string& checkpoint_dir, const RunConfig& config, std::ostream& out,
              std::ostream& err) {
    return run_guarded(err, [&]() {
        BackendBundle bundle = make_backend(config);
        auto gateway = make_gateway(bundle);

        BuildOptions options;
        options.chunking.chunk_size = config.chunk_size;
        options.chunking.overlap = config.overlap;
        options.chunking.prepend_title = config.prepend_title;
        options.chunking.tokenizer_id = config.tokenizer;
        options.embed_batch = config.embed_batch;
        options.workers = config.workers;
        options.checkpoint_dir = checkpoint_dir;

        BuildStats stats;
        TripletIndex index;
        try {
            if (prechunked) {
                index = build_index_from_chunks(*gateway, load_prechunked_jsonl(corpus_path),
                                                options, &stats);
            } else {
                index = build_index(*gateway, load_corpus_jsonl(corpus_path), options, &stats);
            }
        } catch (const GatewayError&) {
            if (!checkpoint_dir.empty()) {
                err << "build aborted; completed chunks are checkpointed under " << checkpoint_dir
                    << " and a rerun resumes there\n";
            }
            throw;
        }
        save_index(index, out_dir);

        nlohmann::json provenance{{"config", config.to_json()},
                                  {"stats", nlohmann::json::parse(stats.to_json())}};
        write_file((fs::path(out_dir) / "build_stats.json").string(), provenance.dump(2) + "\n");

        out << "# chunks " << stats.chunks << "\n";
        out << "# tokens " << stats.tokens << "\n";
        out << "# extracted triplets " << stats.extracted_triplets << "\n";
        out << index.size() << " propositions, " << index.chunks().size() << " chunks -> "
            << out_dir << "\n";
        const UsageTotals totals = gateway->usage().totals();
        out << "llm usage: " << totals.input_tokens << " in, " << totals.output_tokens
            << " out, weighted cost " << std::fixed << std::setprecision(0)
            << weighted_cost(gateway->usage()) << "\n";
        return kExitOk;
    });
}

int cmd_query(const std::string& index_dir, const std::string& question, const RunConfig& config,
              const TraceTarget& trace, std::ostream& out, std::ostream& err) {
    return run_guarded(err, [&]() {
        TripletIndex index = load_index(index_dir);
        BackendBundle bundle = make_backend(config);
        auto gateway = make_gateway(bundle);

        std::ofstream trace_file;
        std::ostream* trace_stream = nullptr;
        if (trace.enabled) {
            if (trace.path.empty()) {
                trace_stream = &err;
            } else {
                trace_file.open(trace.path, std::ios::trunc);
                if (!trace_file) throw InputError("cannot open trace file " + trace.path);
                trace_stream = &trace_file;
            }
            *trace_stream << nlohmann::json{{"config", config.to_json()}}.dump() << "\n";
            trace_stream->flush();
        }

        RoundSink sink;
        if (trace_stream) {
            sink = [trace_stream](const RoundRecord& record) {
                *trace_stream << record.to_json().dump() << "\n";
                trace_stream->flush();
            };
        }

        QueryResult result = run_query(*gateway, index, question, config.resolve_config(), sink);

        if (trace_stream) {
            nlohmann::json final_line = result.to_json();
            final_line.erase("rounds");  // round lines were already streamed
            *trace_stream << final_line.dump() << "\n";
            trace_stream->flush();
        }
        out << result.answer << "\n";
        return kExitOk;
    });
}

int cmd_eval(const std::string& index_dir, const std::string& dataset_path,
             const std::string& out_dir, const RunConfig& config, std::ostream& out,
             std::ostream& err) {
    return run_guarded(err, [&]() {
        TripletIndex index = load_index(index_dir);
        std::vector<QAExample> dataset = load_dataset_jsonl(dataset_path);
        BackendBundle bundle = make_backend(config);
        GatewayFactory factory = [&bundle]() { return make_gateway(bundle); };

        EvalReport report =
            run_eval(factory, index, dataset, config.resolve_config(), config.workers);

        fs::create_directories(out_dir);
        nlohmann::json report_json = report.to_json();
        report_json["config"] = config.to_json();
        write_file((fs::path(out_dir) / "eval_report.json").string(), report_json.dump(2) + "\n");
        write_file((fs::path(out_dir) / "eval_report.csv").string(), report.to_csv());

        err << report.to_text();
        out << std::fixed << std::setprecision(1) << "EM " << report.mean_em * 100.0 << " / F1 "
            << report.mean_f1 * 100.0 << "\n";

        std::size_t errored = 0;
        for (const auto& r : report.rows) {
            if (!r.error.empty()) ++errored;
        }
        double fraction = static_cast<double>(errored) / static_cast<double>(report.rows.size());
        if (fraction > config.eval_fail_threshold) {
            err << "error: " << errored << " of " << report.rows.size()
                << " examples failed (threshold "
                << config.eval_fail_threshold << ")\n";
            return kExitRuntime;
        }
        return kExitOk;
    });
}

}  // namespace tripletrag
