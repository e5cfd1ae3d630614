#pragma once

#include <algorithm>
#include <cctype>
#include <charconv>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <variant>
#include <vector>

#include "trendbreak/errors.hpp"
#include "trendbreak/time_series.hpp"

namespace trendbreak {

/// Value column selected by header name or 0-based position.
using ColumnSpec = std::variant<std::string, std::size_t>;

namespace detail {

inline std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> cells;
    std::string cell;
    std::stringstream ss(line);
    while (std::getline(ss, cell, ',')) {
        // trim surrounding whitespace and quotes
        auto is_space = [](unsigned char c) { return std::isspace(c) != 0; };
        while (!cell.empty() && is_space(cell.back())) cell.pop_back();
        std::size_t b = 0;
        while (b < cell.size() && is_space(cell[b])) ++b;
        cell = cell.substr(b);
        if (cell.size() >= 2 && cell.front() == '"' && cell.back() == '"') {
            cell = cell.substr(1, cell.size() - 2);
        }
        cells.push_back(cell);
    }
    if (!line.empty() && line.back() == ',') cells.push_back("");
    return cells;
}

inline std::optional<double> parse_double(const std::string& s) {
    if (s.empty()) return std::nullopt;
    const char* first = s.data();
    const char* last = s.data() + s.size();
    double value = 0.0;
    auto [ptr, ec] = std::from_chars(first, last, value);
    if (ec != std::errc() || ptr != last) return std::nullopt;
    if (!std::isfinite(value)) return std::nullopt;
    return value;
}

inline std::string lower(std::string s) {
    std::transform(s.begin(), s.end(), s.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return s;
}

}  // namespace detail

/// Reads a comma-delimited file into a TimeSeries. A header row is detected
/// when the first row's chosen cell does not parse as a number. A column
/// named "date" (any case), when present, supplies the labels. Unparseable
/// or missing cells raise InputError naming the 1-based file row.
inline TimeSeries ingest_csv(const std::string& path, const ColumnSpec& column = std::size_t{0}) {
    std::ifstream in(path);
    if (!in) throw InputError("cannot open file: " + path);

    std::vector<std::vector<std::string>> rows;
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        rows.push_back(detail::split_csv_line(line));
    }
    if (rows.empty()) throw InputError("empty file: " + path);

    // Resolve the value column; a name implies a header row.
    std::size_t value_col = 0;
    std::optional<std::size_t> date_col;
    bool has_header = false;
    if (const auto* name = std::get_if<std::string>(&column)) {
        has_header = true;
        const std::string want = detail::lower(*name);
        bool found = false;
        for (std::size_t c = 0; c < rows[0].size(); ++c) {
            if (detail::lower(rows[0][c]) == want) {
                value_col = c;
                found = true;
            }
            if (detail::lower(rows[0][c]) == "date") date_col = c;
        }
        if (!found) throw InputError("column '" + *name + "' not found in header");
    } else {
        value_col = std::get<std::size_t>(column);
        if (value_col >= rows[0].size()) {
            throw InputError("column index " + std::to_string(value_col) + " out of range");
        }
        // header autodetection: non-numeric first cell in the chosen column
        if (!detail::parse_double(rows[0][value_col])) {
            has_header = true;
            for (std::size_t c = 0; c < rows[0].size(); ++c) {
                if (detail::lower(rows[0][c]) == "date") date_col = c;
            }
        }
    }

    TimeSeries y;
    const std::size_t first_data = has_header ? 1 : 0;
    for (std::size_t r = first_data; r < rows.size(); ++r) {
        const std::size_t file_row = r + 1;
        if (value_col >= rows[r].size()) {
            throw InputError("row " + std::to_string(file_row) + ": missing column " +
                             std::to_string(value_col));
        }
        const auto v = detail::parse_double(rows[r][value_col]);
        if (!v) {
            throw InputError("row " + std::to_string(file_row) + ", column " +
                             std::to_string(value_col) + ": cannot parse '" +
                             rows[r][value_col] + "' as a number");
        }
        y.values.push_back(*v);
        if (date_col && *date_col < rows[r].size()) {
            y.labels.push_back(rows[r][*date_col]);
        }
    }
    if (!y.labels.empty() && y.labels.size() != y.values.size()) y.labels.clear();
    if (y.values.size() < 5) {
        throw InputError("file has " + std::to_string(y.values.size()) +
                         " usable rows; at least 5 required");
    }
    return y;
}

/// Column autodetection: headerless files use column 0; files with a header
/// use the first column not named "date".
inline TimeSeries ingest_csv_auto(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw InputError("cannot open file: " + path);
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (!line.empty()) break;
    }
    if (line.empty()) throw InputError("empty file: " + path);
    const std::vector<std::string> first = detail::split_csv_line(line);
    bool all_numeric = true;
    for (const std::string& c : first) {
        if (!detail::parse_double(c)) {
            all_numeric = false;
            break;
        }
    }
    if (all_numeric) return ingest_csv(path, std::size_t{0});
    for (const std::string& c : first) {
        if (detail::lower(c) != "date") return ingest_csv(path, c);
    }
    throw InputError("no value column found in " + path);
}

}  // namespace trendbreak
