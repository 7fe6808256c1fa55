#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace dlaudit::csv {

/// One parsed row with its 1-based source line number.
struct Row {
    std::size_t line = 0;
    std::vector<std::string> fields;
};

/// Header plus data rows of an RFC 4180-style document (double-quote escaping,
/// no embedded newlines). Blank lines and lines starting with '#' are skipped.
struct Table {
    std::vector<std::string> header;
    std::vector<Row> rows;

    /// Column index by name, or nullopt.
    [[nodiscard]] std::optional<std::size_t> column(std::string_view name) const;
};

std::vector<std::string> split_record(std::string_view line);
Table parse(std::string_view content);

/// Quotes a field when it contains a comma, quote, or leading/trailing space.
std::string escape(std::string_view field);
std::string join(const std::vector<std::string>& fields);

}  // namespace dlaudit::csv
