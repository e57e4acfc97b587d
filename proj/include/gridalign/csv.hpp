#pragma once

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace gridalign {

/// Raised for malformed tabular input. Row numbers are 1-based file lines
/// (the header is row 1).
class ParseError : public std::runtime_error {
public:
    ParseError(std::size_t row, std::string column, std::string const& what);

    std::size_t row() const noexcept { return row_; }
    std::string const& column() const noexcept { return column_; }

private:
    std::size_t row_;
    std::string column_;
};

using CsvRow = std::vector<std::string>;

/// A fully materialized CSV document. Handles RFC 4180 quoting, CRLF line
/// endings, and a UTF-8 byte-order mark. Blank lines are skipped.
struct CsvTable {
    CsvRow header;
    std::vector<CsvRow> rows;
    /// File line of each row, for diagnostics.
    std::vector<std::size_t> line_numbers;

    /// Index of a header column, or nullopt.
    std::optional<std::size_t> column(std::string_view name) const;
};

CsvTable parse_csv(std::string_view text);

/// Quotes a field when it contains a delimiter, quote, or newline.
std::string csv_escape(std::string_view field);
std::string csv_join(std::vector<std::string> const& fields);

/// Shortest representation that round-trips through parse_number.
/// NaN is written as the empty string (the missing marker).
std::string format_number(double value);

/// Strict full-string parse. Throws std::invalid_argument.
double parse_number(std::string_view text);
long long parse_integer(std::string_view text);

std::string_view trim(std::string_view s);
std::string to_lower(std::string_view s);

std::string read_file(std::string const& path);
/// Writes atomically enough for our purposes: truncates then writes.
void write_file(std::string const& path, std::string_view content);

}  // namespace gridalign
