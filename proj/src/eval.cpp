#include "tripletrag/eval.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <iomanip>
#include <map>
#include <mutex>
#include <sstream>
#include <thread>

#include "tripletrag/errors.hpp"
#include "tripletrag/jsonl.hpp"
#include "tripletrag/text.hpp"

namespace tripletrag {

namespace {

bool is_ascii_punct(char c) {
    static constexpr std::string_view kPunct = R"(!"#$%&'()*+,-./:;<=>?@[\]^_`{|}~)";
    return kPunct.find(c) != std::string_view::npos;
}

std::vector<std::string> answer_tokens(std::string_view text) {
    std::string lowered = to_lower_ascii(text);
    std::string stripped;
    stripped.reserve(lowered.size());
    for (char c : lowered) {
        if (!is_ascii_punct(c)) stripped.push_back(c);
    }
    std::vector<std::string> tokens;
    for (const auto& span : tokenize_whitespace(stripped)) {
        std::string tok = stripped.substr(span.begin, span.end - span.begin);
        if (tok == "a" || tok == "an" || tok == "the") continue;
        tokens.push_back(std::move(tok));
    }
    return tokens;
}

double f1_single(const std::vector<std::string>& pred, const std::vector<std::string>& gold) {
    if (pred.empty() || gold.empty()) return pred.empty() && gold.empty() ? 1.0 : 0.0;
    std::map<std::string, int> counts;
    for (const auto& t : gold) ++counts[t];
    int overlap = 0;
    for (const auto& t : pred) {
        auto it = counts.find(t);
        if (it != counts.end() && it->second > 0) {
            --it->second;
            ++overlap;
        }
    }
    if (overlap == 0) return 0.0;
    double precision = static_cast<double>(overlap) / static_cast<double>(pred.size());
    double recall = static_cast<double>(overlap) / static_cast<double>(gold.size());
    return 2.0 * precision * recall / (precision + recall);
}

}  // namespace

std::string normalize_answer(std::string_view text) {
    auto tokens = answer_tokens(text);
    std::string out;
    for (const auto& t : tokens) {
        if (!out.empty()) out += ' ';
        out += t;
    }
    return out;
}

int exact_match(std::string_view pred, const std::vector<std::string>& golds) {
    if (golds.empty()) throw ContractViolation("exact_match requires at least one gold answer");
    std::string p = normalize_answer(pred);
    for (const auto& g : golds) {
        if (p == normalize_answer(g)) return 1;
    }
    return 0;
}

double f1(std::string_view pred, const std::vector<std::string>& golds) {
    if (golds.empty()) throw ContractViolation("f1 requires at least one gold answer");
    auto pred_tokens = answer_tokens(pred);
    double best = 0.0;
    for (const auto& g : golds) {
        best = std::max(best, f1_single(pred_tokens, answer_tokens(g)));
    }
    return best;
}

std::vector<QAExample> load_dataset_jsonl(const std::string& path) {
    std::vector<QAExample> out;
    for_each_jsonl(path, [&](const nlohmann::json& row, std::size_t line) {
        auto where = [&] { return path + ":" + std::to_string(line); };
        if (!row.contains("id") || !row.at("id").is_string()) {
            throw InputError(where() + ": missing string field \"id\"");
        }
        if (!row.contains("question") || !row.at("question").is_string()) {
            throw InputError(where() + ": missing string field \"question\"");
        }
        if (!row.contains("answers") || !row.at("answers").is_array() ||
            row.at("answers").empty()) {
            throw InputError(where() + ": \"answers\" must be a non-empty array");
        }
        QAExample ex;
        ex.example_id = row.at("id").get<std::string>();
        ex.question = row.at("question").get<std::string>();
        bool any_survives = false;
        for (const auto& a : row.at("answers")) {
            if (!a.is_string()) throw InputError(where() + ": answers must be strings");
            ex.gold_answers.push_back(a.get<std::string>());
            if (!normalize_answer(ex.gold_answers.back()).empty()) any_survives = true;
        }
        if (!any_survives) {
            throw InputError(where() + ": no gold answer survives normalization");
        }
        out.push_back(std::move(ex));
    });
    return out;
}

void recompute_aggregates(EvalReport& report) {
    report.mean_em = report.mean_f1 = report.mean_rounds = report.mean_latency_ms = 0.0;
    report.total_input_tokens = report.total_output_tokens = 0;
    report.total_weighted_cost = 0.0;
    report.resolved = {};
    report.unresolved = {};
    if (report.rows.empty()) return;

    double em_sum = 0, f1_sum = 0, rounds_sum = 0, latency_sum = 0;
    double res_em = 0, res_f1 = 0, unres_em = 0, unres_f1 = 0;
    for (const auto& r : report.rows) {
        em_sum += r.em;
        f1_sum += r.f1;
        rounds_sum += r.rounds;
        latency_sum += r.latency_ms;
        report.total_input_tokens += r.input_tokens;
        report.total_output_tokens += r.output_tokens;
        report.total_weighted_cost += r.weighted_cost;
        if (r.fully_resolved) {
            ++report.resolved.count;
            res_em += r.em;
            res_f1 += r.f1;
        } else {
            ++report.unresolved.count;
            unres_em += r.em;
            unres_f1 += r.f1;
        }
    }
    auto n = static_cast<double>(report.rows.size());
    report.mean_em = em_sum / n;
    report.mean_f1 = f1_sum / n;
    report.mean_rounds = rounds_sum / n;
    report.mean_latency_ms = latency_sum / n;
    if (report.resolved.count > 0) {
        report.resolved.mean_em = res_em / static_cast<double>(report.resolved.count);
        report.resolved.mean_f1 = res_f1 / static_cast<double>(report.resolved.count);
    }
    if (report.unresolved.count > 0) {
        report.unresolved.mean_em = unres_em / static_cast<double>(report.unresolved.count);
        report.unresolved.mean_f1 = unres_f1 / static_cast<double>(report.unresolved.count);
    }
}

EvalReport run_eval(const GatewayFactory& make_gateway, const TripletIndex& index,
                    const std::vector<QAExample>& dataset, const ResolveConfig& config,
                    int workers) {
    if (dataset.empty()) throw InputError("dataset is empty", "eval");
    if (!make_gateway) throw ContractViolation("run_eval requires a gateway factory");

    EvalReport report;
    report.rows.resize(dataset.size());

    std::atomic<std::size_t> cursor{0};
    std::mutex fatal_mutex;
    std::exception_ptr fatal;  // programming errors abort the run after join
    auto work = [&]() {
        while (true) {
            std::size_t i = cursor.fetch_add(1);
            if (i >= dataset.size()) return;
            {
                std::lock_guard lock(fatal_mutex);
                if (fatal) return;
            }
            const QAExample& ex = dataset[i];
            EvalRow row;
            row.example_id = ex.example_id;
            auto gateway = make_gateway();
            auto start = std::chrono::steady_clock::now();
            try {
                QueryResult qr = run_query(*gateway, index, ex.question, config);
                row.answer = qr.answer;
                row.em = exact_match(qr.answer, ex.gold_answers);
                row.f1 = f1(qr.answer, ex.gold_answers);
                row.rounds = qr.rounds_used;
                row.fully_resolved = qr.fully_resolved;
                UsageTotals totals = qr.usage.totals();
                row.input_tokens = totals.input_tokens;
                row.output_tokens = totals.output_tokens;
                row.weighted_cost = weighted_cost(qr.usage);
                if (row.em == 1.0 && row.f1 != 1.0) {
                    throw ContractViolation("EM=1 with F1!=1 for example " + ex.example_id);
                }
            } catch (const ContractViolation&) {
                std::lock_guard lock(fatal_mutex);
                if (!fatal) fatal = std::current_exception();
                return;
            } catch (const std::exception& e) {
                row.error = e.what();
                UsageTotals totals = gateway->usage().totals();
                row.input_tokens = totals.input_tokens;
                row.output_tokens = totals.output_tokens;
                row.weighted_cost = weighted_cost(gateway->usage());
            }
            auto end = std::chrono::steady_clock::now();
            row.latency_ms =
                std::chrono::duration<double, std::milli>(end - start).count();
            report.rows[i] = std::move(row);
        }
    };

    int n_workers = std::max(1, std::min<int>(workers, static_cast<int>(dataset.size())));
    if (n_workers == 1) {
        work();
    } else {
        std::vector<std::thread> threads;
        threads.reserve(static_cast<std::size_t>(n_workers));
        for (int i = 0; i < n_workers; ++i) threads.emplace_back(work);
        for (auto& t : threads) t.join();
    }
    if (fatal) std::rethrow_exception(fatal);

    recompute_aggregates(report);
    return report;
}

nlohmann::json EvalReport::to_json() const {
    nlohmann::json rows_json = nlohmann::json::array();
    for (const auto& r : rows) {
        rows_json.push_back({{"example_id", r.example_id},
                             {"answer", r.answer},
                             {"em", r.em},
                             {"f1", r.f1},
                             {"rounds", r.rounds},
                             {"fully_resolved", r.fully_resolved},
                             {"input_tokens", r.input_tokens},
                             {"output_tokens", r.output_tokens},
                             {"weighted_cost", r.weighted_cost},
                             {"latency_ms", r.latency_ms},
                             {"error", r.error}});
    }
    auto split = [](const Split& s) {
        return nlohmann::json{{"count", s.count}, {"mean_em", s.mean_em}, {"mean_f1", s.mean_f1}};
    };
    return nlohmann::json{
        {"rows", rows_json},
        {"aggregates",
         {{"examples", rows.size()},
          {"mean_em", mean_em},
          {"mean_f1", mean_f1},
          {"mean_rounds", mean_rounds},
          {"mean_latency_ms", mean_latency_ms},
          {"total_input_tokens", total_input_tokens},
          {"total_output_tokens", total_output_tokens},
          {"total_weighted_cost", total_weighted_cost}}},
        {"splits", {{"resolved", split(resolved)}, {"unresolved", split(unresolved)}}}};
}

std::string EvalReport::to_text() const {
    std::ostringstream out;
    out << std::left << std::setw(24) << "example" << std::right << std::setw(6) << "em"
        << std::setw(8) << "f1" << std::setw(8) << "rounds" << std::setw(10) << "resolved"
        << std::setw(12) << "cost" << "  error\n";
    out << std::fixed;
    for (const auto& r : rows) {
        out << std::left << std::setw(24) << r.example_id << std::right << std::setw(6)
            << std::setprecision(0) << r.em << std::setw(8) << std::setprecision(3) << r.f1
            << std::setw(8) << r.rounds << std::setw(10) << (r.fully_resolved ? "yes" : "no")
            << std::setw(12) << std::setprecision(0) << r.weighted_cost << "  " << r.error
            << "\n";
    }
    out << std::setprecision(1);
    out << "\nEM " << mean_em * 100.0 << " / F1 " << mean_f1 * 100.0 << "\n";
    out << std::setprecision(2);
    out << "mean rounds " << mean_rounds << ", total weighted cost " << std::setprecision(0)
        << total_weighted_cost << " (" << total_input_tokens << " in + 4 x "
        << total_output_tokens << " out)\n";
    out << std::setprecision(1);
    out << "resolved split: " << resolved.count << " examples, EM " << resolved.mean_em * 100.0
        << " / F1 " << resolved.mean_f1 * 100.0 << "\n";
    out << "unresolved split: " << unresolved.count << " examples, EM "
        << unresolved.mean_em * 100.0 << " / F1 " << unresolved.mean_f1 * 100.0 << "\n";
    return out.str();
}

std::string EvalReport::to_csv() const {
    auto quote = [](const std::string& s) {
        std::string q = "\"";
        for (char c : s) {
            if (c == '"') q += "\"\"";
            else q += c;
        }
        q += '"';
        return q;
    };
    std::ostringstream out;
    out << "example_id,em,f1,rounds,fully_resolved,input_tokens,output_tokens,weighted_cost,"
           "latency_ms,error\n";
    out << std::fixed;
    for (const auto& r : rows) {
        out << quote(r.example_id) << ',' << std::setprecision(0) << r.em << ','
            << std::setprecision(6) << r.f1 << ',' << r.rounds << ','
            << (r.fully_resolved ? "true" : "false") << ',' << r.input_tokens << ','
            << r.output_tokens << ',' << std::setprecision(0) << r.weighted_cost << ','
            << std::setprecision(3) << r.latency_ms << ',' << quote(r.error) << "\n";
    }
    return out.str();
}

}  // namespace tripletrag
