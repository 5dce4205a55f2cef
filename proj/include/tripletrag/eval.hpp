#pragma once
// Dataset evaluation: answer normalization, EM / token-F1 scoring, and a
// bounded-concurrency harness that runs the query loop per example and
// aggregates accuracy plus efficiency (tokens, rounds, latency).

#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "json.hpp"

#include "tripletrag/gateway.hpp"
#include "tripletrag/index.hpp"
#include "tripletrag/resolve.hpp"

namespace tripletrag {

struct QAExample {
    std::string example_id;
    std::string question;
    std::vector<std::string> gold_answers;
};

// {"id": str, "question": str, "answers": [str, ...]}; every example
// must keep at least one gold that survives normalization.
std::vector<QAExample> load_dataset_jsonl(const std::string& path);

// Lowercase, drop ASCII punctuation, drop whole-word articles
// (a / an / the), collapse whitespace. Both metrics share this.
std::string normalize_answer(std::string_view text);

// 1 iff the normalized prediction equals some normalized gold.
int exact_match(std::string_view pred, const std::vector<std::string>& golds);

// Max over golds of token-multiset F1 on normalized text. When either
// side has no tokens the score is 0, unless both are empty (then 1).
double f1(std::string_view pred, const std::vector<std::string>& golds);

struct EvalRow {
    std::string example_id;
    std::string answer;
    double em = 0.0;
    double f1 = 0.0;
    int rounds = 0;
    bool fully_resolved = false;
    std::int64_t input_tokens = 0;
    std::int64_t output_tokens = 0;
    double weighted_cost = 0.0;
    double latency_ms = 0.0;
    std::string error;  // empty on success
};

struct EvalReport {
    struct Split {
        std::size_t count = 0;
        double mean_em = 0.0;  // 0 when the split is empty
        double mean_f1 = 0.0;
    };

    std::vector<EvalRow> rows;  // dataset order
    double mean_em = 0.0;
    double mean_f1 = 0.0;
    double mean_rounds = 0.0;
    double mean_latency_ms = 0.0;
    std::int64_t total_input_tokens = 0;
    std::int64_t total_output_tokens = 0;
    double total_weighted_cost = 0.0;
    Split resolved;    // rows that ended fully resolved
    Split unresolved;  // everything else, including errored rows

    nlohmann::json to_json() const;
    std::string to_text() const;  // aligned columns + summary
    std::string to_csv() const;   // per-example rows
};

// Recomputes every aggregate from `rows`; run_eval uses this and tests
// can call it to cross-check a report.
void recompute_aggregates(EvalReport& report);

// One Gateway per example keeps ledgers isolated under concurrency;
// the factory is called from worker threads.
using GatewayFactory = std::function<std::unique_ptr<Gateway>()>;

// Failures of individual examples become rows with EM=0 / F1=0 and an
// error tag; the run itself only fails on an empty dataset.
EvalReport run_eval(const GatewayFactory& make_gateway, const TripletIndex& index,
                    const std::vector<QAExample>& dataset, const ResolveConfig& config,
                    int workers = 4);

}  // namespace tripletrag
