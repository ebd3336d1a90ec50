#pragma once

#include <filesystem>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "vpair/errors.hpp"
#include "vpair/util.hpp"

namespace vpair {

// Line-delimited JSON record files: one object per line, parsed through the
// type's from_json. Blank lines are ignored.
template <typename T>
std::vector<T> read_jsonl(const std::filesystem::path& path) {
    std::vector<T> items;
    std::size_t line_no = 0;
    for (const auto& line : split_lines(read_text_file(path))) {
        ++line_no;
        if (trim(line).empty()) continue;
        try {
            items.push_back(nlohmann::json::parse(line).template get<T>());
        } catch (const nlohmann::json::exception& e) {
            throw ParseError(path.string() + " line " + std::to_string(line_no) + ": " + e.what());
        }
    }
    return items;
}

template <typename T>
void write_jsonl(const std::filesystem::path& path, const std::vector<T>& items) {
    std::ostringstream out;
    for (const T& item : items) {
        nlohmann::json j = item;
        out << j.dump() << '\n';
    }
    atomic_write_text_file(path, out.str());
}

}  // namespace vpair
