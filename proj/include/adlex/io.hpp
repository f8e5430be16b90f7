#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "json.hpp"

namespace adlex::io {

using nlohmann::json;

std::string read_file(const std::filesystem::path& path);

// Writes through a temporary sibling file and renames it into place, so a
// reader never observes a partially written artifact.
void write_file_atomic(const std::filesystem::path& path, const std::string& contents);

std::vector<json> read_jsonl(const std::filesystem::path& path);
std::string to_jsonl(const std::vector<json>& rows);

// Pretty JSON with a trailing newline.
std::string dump(const json& j);

}  // namespace adlex::io
