#pragma once

#include <filesystem>
#include <string>

#include "merging/measure.hpp"

namespace merging {

// Writes to a temporary sibling file and renames it into place.
void write_file_atomic(const std::filesystem::path& path, const std::string& content);
// Pretty-printed JSON with a trailing newline.
void write_json_atomic(const std::filesystem::path& path, const Json& value);
std::string read_file(const std::filesystem::path& path);
// Creates the directory (and parents) if needed.
void ensure_directory(const std::filesystem::path& dir);

}  // namespace merging
