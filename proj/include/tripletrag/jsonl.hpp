#pragma once
// Line-delimited JSON helpers. Blank lines are skipped; parse failures
// report the path and 1-based line number.

#include <functional>
#include <string>
#include <vector>

#include "json.hpp"

namespace tripletrag {

std::vector<nlohmann::json> read_jsonl(const std::string& path);

void for_each_jsonl(const std::string& path,
                    const std::function<void(const nlohmann::json&, std::size_t line)>& fn);

// Same contract over an in-memory buffer; `origin` labels parse errors.
void for_each_jsonl_text(std::string_view content, const std::string& origin,
                         const std::function<void(const nlohmann::json&, std::size_t line)>& fn);

void write_jsonl(const std::string& path, const std::vector<nlohmann::json>& rows);

std::string read_file(const std::string& path);
void write_file(const std::string& path, std::string_view content);

}  // namespace tripletrag
