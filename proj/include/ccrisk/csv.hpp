#pragma once

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "ccrisk/errors.hpp"

// Minimal delimited-text IO: comma separator, header row, "." decimal point.

namespace ccrisk {

struct TextTable {
    std::vector<std::string> columns;
    std::vector<std::vector<std::string>> rows;
};

inline std::vector<std::string> split_line(const std::string& line, char sep) {
    std::vector<std::string> out;
    std::string cell;
    std::istringstream ss(line);
    while (std::getline(ss, cell, sep)) out.push_back(cell);
    if (!line.empty() && line.back() == sep) out.emplace_back();
    return out;
}

inline std::string trim(const std::string& s) {
    std::size_t b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    std::size_t e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

inline TextTable read_delimited(const std::string& path, char sep = ',') {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open '" + path + "' for reading");
    TextTable t;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (trim(line).empty()) continue;
        std::vector<std::string> cells = split_line(line, sep);
        for (auto& c : cells) c = trim(c);
        if (t.columns.empty()) {
            t.columns = cells;
        } else {
            if (cells.size() != t.columns.size())
                throw DataError(path + ": line " + std::to_string(lineno) + " has " +
                                std::to_string(cells.size()) + " cells, expected " +
                                std::to_string(t.columns.size()));
            t.rows.push_back(std::move(cells));
        }
    }
    if (t.columns.empty()) throw DataError(path + ": empty file (no header row)");
    return t;
}

inline void write_delimited(const std::string& path, const std::vector<std::string>& columns,
                            const std::vector<std::vector<std::string>>& rows, char sep = ',') {
    std::ofstream out(path);
    if (!out) throw DataError("cannot open '" + path + "' for writing");
    for (std::size_t j = 0; j < columns.size(); ++j) {
        if (j) out << sep;
        out << columns[j];
    }
    out << '\n';
    for (const auto& r : rows) {
        for (std::size_t j = 0; j < r.size(); ++j) {
            if (j) out << sep;
            out << r[j];
        }
        out << '\n';
    }
    if (!out) throw DataError("write to '" + path + "' failed");
}

inline void write_delimited(const TextTable& t, const std::string& path, char sep = ',') {
    write_delimited(path, t.columns, t.rows, sep);
}

// Shortest decimal representation that parses back to the same double.
inline std::string format_double(double x) {
    char buf[40];
    for (int prec = 15; prec <= 17; ++prec) {
        std::snprintf(buf, sizeof(buf), "%.*g", prec, x);
        if (std::strtod(buf, nullptr) == x) return buf;
    }
    return buf;
}

inline std::string format_fixed(double x, int digits) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.*f", digits, x);
    return buf;
}

inline double parse_double(const std::string& cell, const std::string& context) {
    const std::string s = trim(cell);
    if (s.empty()) throw DataError("empty cell at " + context);
    char* end = nullptr;
    double v = std::strtod(s.c_str(), &end);
    if (end == s.c_str() || *end != '\0')
        throw DataError("non-numeric cell '" + s + "' at " + context);
    return v;
}

}  // namespace ccrisk
