#pragma once

#include <filesystem>
#include <functional>
#include <string>
#include <string_view>
#include <vector>

namespace ofc {

std::string_view trim(std::string_view text);
std::string to_lower(std::string_view text);
std::string to_upper(std::string_view text);

// Collapses every whitespace run to one space and trims both ends.
std::string normalize_whitespace(std::string_view text);

std::vector<std::string> split_lines(std::string_view text);
std::vector<std::string> split(std::string_view text, char sep);
bool starts_with_icase(std::string_view text, std::string_view prefix);

// Lowercase hex SHA-256 digest.
std::string sha256_hex(std::string_view data);

std::string read_file(const std::filesystem::path& path);

// Writes through a sibling temp file and renames it into place, so readers
// never observe a partially written file.
void write_file_atomic(const std::filesystem::path& path, std::string_view content);

// Calls `fn(line_number, line)` for each non-blank line (1-based numbering).
void for_each_line(const std::filesystem::path& path,
                   const std::function<void(std::size_t, std::string_view)>& fn);

std::string getenv_or(const char* name, std::string_view fallback);

// Current time as "YYYY-MM-DDTHH:MM:SS.mmmZ"; fixed width, so it sorts as text.
std::string utc_timestamp();

}  // namespace ofc
