#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace dlaudit::text {

std::string to_lower(std::string_view s);
std::string to_upper(std::string_view s);
std::string_view trim(std::string_view s);
std::vector<std::string_view> split(std::string_view s, char sep);
bool is_ascii_alpha(std::string_view s);
bool is_ascii_digits(std::string_view s);

/// Reads a whole file; throws IoError when it cannot be opened.
std::string read_file(const std::string& path);

/// Splits file content into lines, dropping a trailing '\r' on each.
std::vector<std::string_view> lines(std::string_view content);

/// fnmatch-style glob over ASCII: '*' and '?' only.
bool glob_match(std::string_view pattern, std::string_view s);

}  // namespace dlaudit::text
