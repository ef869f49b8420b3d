// This file is part of rmdp-lab, a toolkit for tabular robust Markov
// decision processes. Distributed under the MIT license; see LICENSE.
#pragma once

#include <charconv>
#include <cmath>
#include <cstddef>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "rmdp_lab/types.hpp"

namespace rmdp_lab {

/**
 * Formats a double as the shortest decimal string that parses back to the
 * same bits (std::to_chars round-trip guarantee). Locale-independent:
 * always uses '.' as the decimal separator.
 */
inline std::string format_double(prec_t value) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof(buf), value);
    return std::string(buf, res.ptr);
}

/// Parses a double written by format_double (or any strtod-style literal).
inline prec_t parse_double(const std::string& text) {
    prec_t value = 0.0;
    const char* begin = text.data();
    const char* end = begin + text.size();
    const auto res = std::from_chars(begin, end, value);
    if (res.ec != std::errc{} || res.ptr != end)
        throw ParseError("invalid numeric field '" + text + "'");
    return value;
}

/// A rectangular CSV table with a header row; all data cells are doubles
/// except that missing values are written/read as empty cells (NaN).
struct CsvTable {
    std::vector<std::string> header;
    std::vector<numvec> rows;
};

/// Serializes a table. NaN cells become empty fields.
inline std::string csv_to_string(const CsvTable& table) {
    std::ostringstream out;
    for (std::size_t c = 0; c < table.header.size(); ++c) {
        if (c) out << ',';
        out << table.header[c];
    }
    out << '\n';
    for (const numvec& row : table.rows) {
        if (row.size() != table.header.size())
            throw ParseError("csv row width does not match header");
        for (std::size_t c = 0; c < row.size(); ++c) {
            if (c) out << ',';
            if (!std::isnan(row[c])) out << format_double(row[c]);
        }
        out << '\n';
    }
    return out.str();
}

inline void save_csv(const CsvTable& table, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw ParseError("cannot open '" + path + "' for writing");
    out << csv_to_string(table);
    if (!out) throw ParseError("failed writing '" + path + "'");
}

namespace detail {

inline std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> fields;
    std::string field;
    for (const char ch : line) {
        if (ch == ',') {
            fields.push_back(field);
            field.clear();
        } else if (ch != '\r') {
            field.push_back(ch);
        }
    }
    fields.push_back(field);
    return fields;
}

} // namespace detail

/// Parses a table written by csv_to_string; empty cells become NaN.
inline CsvTable csv_from_string(const std::string& text) {
    CsvTable table;
    std::istringstream in(text);
    std::string line;
    if (!std::getline(in, line)) throw ParseError("csv: empty input");
    table.header = detail::split_csv_line(line);
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        const std::vector<std::string> fields = detail::split_csv_line(line);
        if (fields.size() != table.header.size())
            throw ParseError("csv line " + std::to_string(line_no) + ": expected " +
                             std::to_string(table.header.size()) + " fields, got " +
                             std::to_string(fields.size()));
        numvec row;
        row.reserve(fields.size());
        for (const std::string& f : fields)
            row.push_back(f.empty() ? std::nan("") : parse_double(f));
        table.rows.push_back(std::move(row));
    }
    return table;
}

inline CsvTable load_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open '" + path + "'");
    std::ostringstream buf;
    buf << in.rdbuf();
    return csv_from_string(buf.str());
}

} // namespace rmdp_lab
