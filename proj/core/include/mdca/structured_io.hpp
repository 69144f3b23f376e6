/// @file structured_io.hpp
/// @brief JSON / YAML / JSONL file helpers.

#pragma once

#include <filesystem>
#include <functional>
#include <string>
#include <string_view>

#include <nlohmann/json.hpp>

namespace mdca {

using Json = nlohmann::json;

/// Reads a JSON or YAML document; YAML is chosen by a .yaml/.yml extension.
/// YAML scalars become bool/integer/float when they parse as such unless quoted.
Json load_structured_file(const std::filesystem::path& path);

Json parse_yaml(std::string_view text);

std::string read_text_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, std::string_view contents);

/// Calls fn(line_number, line) for every non-blank line of a JSONL file.
/// Line numbers are 1-based.
void for_each_jsonl_line(const std::filesystem::path& path,
                         const std::function<void(std::size_t, std::string_view)>& fn);

/// Compact single-line dump with UTF-8 passed through unescaped.
std::string dump_line(const Json& value);

}  // namespace mdca
