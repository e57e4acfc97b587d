#include "gridalign/csv.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include <fmt/format.h>

namespace gridalign {

ParseError::ParseError(std::size_t row, std::string column, std::string const& what)
    : std::runtime_error(column.empty() ? fmt::format("row {}: {}", row, what)
                                        : fmt::format("row {}, column '{}': {}", row, column, what)),
      row_(row),
      column_(std::move(column)) {}

std::optional<std::size_t> CsvTable::column(std::string_view name) const {
    auto it = std::find(header.begin(), header.end(), name);
    if (it == header.end()) {
        return std::nullopt;
    }
    return static_cast<std::size_t>(it - header.begin());
}

CsvTable parse_csv(std::string_view text) {
    if (text.starts_with("\xEF\xBB\xBF")) {
        text.remove_prefix(3);
    }

    CsvTable table;
    CsvRow row;
    std::string field;
    bool in_quotes = false;
    bool field_started = false;
    bool saw_header = false;
    std::size_t line = 1;
    std::size_t row_line = 1;

    auto end_row = [&] {
        bool blank = row.empty() && field.empty() && !field_started;
        if (!blank) {
            row.push_back(std::move(field));
            if (!saw_header) {
                for (auto& h : row) {
                    h = std::string(trim(h));
                }
                table.header = std::move(row);
                saw_header = true;
            } else {
                table.rows.push_back(std::move(row));
                table.line_numbers.push_back(row_line);
            }
        }
        row.clear();
        field.clear();
        field_started = false;
    };

    for (std::size_t i = 0; i < text.size(); ++i) {
        char c = text[i];
        if (in_quotes) {
            if (c == '"') {
                if (i + 1 < text.size() && text[i + 1] == '"') {
                    field.push_back('"');
                    ++i;
                } else {
                    in_quotes = false;
                }
            } else {
                if (c == '\n') {
                    ++line;
                }
                field.push_back(c);
            }
            continue;
        }
        switch (c) {
            case '"':
                in_quotes = true;
                field_started = true;
                break;
            case ',':
                row.push_back(std::move(field));
                field.clear();
                field_started = true;
                break;
            case '\r':
                break;
            case '\n':
                end_row();
                ++line;
                row_line = line;
                break;
            default:
                field.push_back(c);
                field_started = true;
        }
    }
    if (in_quotes) {
        throw ParseError(row_line, "", "unterminated quoted field");
    }
    end_row();
    return table;
}

std::string csv_escape(std::string_view field) {
    if (field.find_first_of(",\"\n\r") == std::string_view::npos) {
        return std::string(field);
    }
    std::string out = "\"";
    for (char c : field) {
        if (c == '"') {
            out.push_back('"');
        }
        out.push_back(c);
    }
    out.push_back('"');
    return out;
}

std::string csv_join(std::vector<std::string> const& fields) {
    std::string out;
    for (std::size_t i = 0; i < fields.size(); ++i) {
        if (i != 0) {
            out.push_back(',');
        }
        out += csv_escape(fields[i]);
    }
    return out;
}

std::string format_number(double value) {
    if (std::isnan(value)) {
        return {};
    }
    if (value == 0.0) {
        return "0";  // folds -0
    }
    char buf[64];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), value);
    return std::string(buf, ptr);
}

double parse_number(std::string_view text) {
    text = trim(text);
    if (!text.empty() && text.front() == '+') {
        text.remove_prefix(1);
    }
    double value = 0.0;
    auto const* end = text.data() + text.size();
    auto [ptr, ec] = std::from_chars(text.data(), end, value);
    if (text.empty() || ec != std::errc{} || ptr != end) {
        throw std::invalid_argument(fmt::format("'{}' is not a number", text));
    }
    return value;
}

long long parse_integer(std::string_view text) {
    text = trim(text);
    long long value = 0;
    auto const* end = text.data() + text.size();
    auto [ptr, ec] = std::from_chars(text.data(), end, value);
    if (text.empty() || ec != std::errc{} || ptr != end) {
        throw std::invalid_argument(fmt::format("'{}' is not an integer", text));
    }
    return value;
}

std::string_view trim(std::string_view s) {
    auto is_space = [](char c) { return std::isspace(static_cast<unsigned char>(c)) != 0; };
    while (!s.empty() && is_space(s.front())) {
        s.remove_prefix(1);
    }
    while (!s.empty() && is_space(s.back())) {
        s.remove_suffix(1);
    }
    return s;
}

std::string to_lower(std::string_view s) {
    std::string out(s);
    std::transform(out.begin(), out.end(), out.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return out;
}

std::string read_file(std::string const& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw std::runtime_error(fmt::format("cannot open '{}' for reading", path));
    }
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_file(std::string const& path, std::string_view content) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw std::runtime_error(fmt::format("cannot open '{}' for writing", path));
    }
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    if (!out) {
        throw std::runtime_error(fmt::format("write to '{}' failed", path));
    }
}

}  // namespace gridalign
