#pragma once
// Token accounting. Every completion appends one entry tagged with the
// pipeline phase that made it; the weighted cost is
//   input_tokens + 4 * output_tokens
// which mirrors typical API pricing where generation is the expensive side.

#include <cstdint>
#include <map>
#include <mutex>
#include <string>
#include <vector>

#include "json.hpp"

namespace tripletrag {

struct UsageEntry {
    std::string phase;
    std::int64_t input_tokens = 0;
    std::int64_t output_tokens = 0;
    bool estimated = false;  // counted locally because the endpoint reported no usage
};

struct UsageTotals {
    std::int64_t input_tokens = 0;
    std::int64_t output_tokens = 0;
};

class UsageLedger {
public:
    UsageLedger() = default;
    UsageLedger(const UsageLedger& other);
    UsageLedger& operator=(const UsageLedger& other);

    void add(UsageEntry entry);
    void merge(const UsageLedger& other);

    std::vector<UsageEntry> entries() const;
    UsageTotals totals() const;
    std::map<std::string, UsageTotals> phase_totals() const;

    nlohmann::json to_json() const;

private:
    mutable std::mutex mutex_;
    std::vector<UsageEntry> entries_;
};

double weighted_cost(const UsageLedger& ledger);
double weighted_cost(const UsageLedger& ledger, const std::string& phase);
double weighted_cost(std::int64_t input_tokens, std::int64_t output_tokens);

}  // namespace tripletrag
