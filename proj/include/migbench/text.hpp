#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace migbench::text {

/// Replaces every invalid UTF-8 sequence with U+FFFD.
std::string sanitize_utf8(std::string_view bytes);

/// Decodes (already valid) UTF-8 into code points.
std::vector<char32_t> code_points(std::string_view utf8);

std::string_view trim(std::string_view s);
std::string_view trim_right(std::string_view s);

bool starts_with(std::string_view s, std::string_view prefix);
bool ends_with(std::string_view s, std::string_view suffix);

/// Splits on '\n'. A trailing newline does not yield an empty final element.
std::vector<std::string> split_lines(std::string_view s);

std::string to_lower_ascii(std::string_view s);

std::size_t word_count(std::string_view s);

std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::string_view contents);

}  // namespace migbench::text
