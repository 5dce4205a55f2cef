#include "tripletrag/usage.hpp"

namespace tripletrag {

UsageLedger::UsageLedger(const UsageLedger& other) {
    std::lock_guard lock(other.mutex_);
    entries_ = other.entries_;
}

UsageLedger& UsageLedger::operator=(const UsageLedger& other) {
    if (this == &other) return *this;
    std::scoped_lock lock(mutex_, other.mutex_);
    entries_ = other.entries_;
    return *this;
}

void UsageLedger::add(UsageEntry entry) {
    std::lock_guard lock(mutex_);
    entries_.push_back(std::move(entry));
}

void UsageLedger::merge(const UsageLedger& other) {
    const auto incoming = other.entries();
    std::lock_guard lock(mutex_);
    entries_.insert(entries_.end(), incoming.begin(), incoming.end());
}

std::vector<UsageEntry> UsageLedger::entries() const {
    std::lock_guard lock(mutex_);
    return entries_;
}

UsageTotals UsageLedger::totals() const {
    std::lock_guard lock(mutex_);
    UsageTotals t;
    for (const auto& e : entries_) {
        t.input_tokens += e.input_tokens;
        t.output_tokens += e.output_tokens;
    }
    return t;
}

std::map<std::string, UsageTotals> UsageLedger::phase_totals() const {
    std::lock_guard lock(mutex_);
    std::map<std::string, UsageTotals> by_phase;
    for (const auto& e : entries_) {
        auto& t = by_phase[e.phase];
        t.input_tokens += e.input_tokens;
        t.output_tokens += e.output_tokens;
    }
    return by_phase;
}

nlohmann::json UsageLedger::to_json() const {
    const auto t = totals();
    nlohmann::json phases = nlohmann::json::object();
    for (const auto& [phase, pt] : phase_totals()) {
        phases[phase] = {{"input_tokens", pt.input_tokens},
                         {"output_tokens", pt.output_tokens},
                         {"weighted_cost", weighted_cost(pt.input_tokens, pt.output_tokens)}};
    }
    return {{"input_tokens", t.input_tokens},
            {"output_tokens", t.output_tokens},
            {"weighted_cost", weighted_cost(t.input_tokens, t.output_tokens)},
            {"phases", phases}};
}

double weighted_cost(std::int64_t input_tokens, std::int64_t output_tokens) {
    return static_cast<double>(input_tokens) + 4.0 * static_cast<double>(output_tokens);
}

double weighted_cost(const UsageLedger& ledger) {
    const auto t = ledger.totals();
    return weighted_cost(t.input_tokens, t.output_tokens);
}

double weighted_cost(const UsageLedger& ledger, const std::string& phase) {
    const auto by_phase = ledger.phase_totals();
    auto it = by_phase.find(phase);
    if (it == by_phase.end()) return 0.0;
    return weighted_cost(it->second.input_tokens, it->second.output_tokens);
}

}  // namespace tripletrag
