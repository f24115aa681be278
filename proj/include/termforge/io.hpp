#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace termforge::io {

/// Reads a text file into lines (without terminators). A trailing newline does
/// not produce an extra empty line. Throws termforge::Error if unreadable.
std::vector<std::string> read_lines(const std::filesystem::path& path);

std::string read_file(const std::filesystem::path& path);

/// Writes `content` to a sibling temp file and renames it over `path`, so
/// readers never observe a partially written file.
void write_file_atomic(const std::filesystem::path& path, std::string_view content);

std::vector<std::string> split(std::string_view s, char delim);
std::vector<std::string> split_whitespace(std::string_view s);
std::string_view trim(std::string_view s);
std::string join(const std::vector<std::string>& parts, std::string_view sep = " ");

/// Shortest decimal representation that parses back to the same double.
std::string format_double(double value);
double parse_double(std::string_view text);

}  // namespace termforge::io
