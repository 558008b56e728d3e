#pragma once

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "wplap/error.hpp"

namespace wplap {

/// Round-trip exact decimal form of a double.
inline std::string fmt_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

/// Simple comma-separated table with a header row. Cells never contain commas.
struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;

    std::size_t column(const std::string& name) const {
        for (std::size_t i = 0; i < header.size(); ++i)
            if (header[i] == name) return i;
        throw ArgumentError("csv: no column named '" + name + "'");
    }

    double number(std::size_t row, std::size_t col) const {
        const std::string& s = rows.at(row).at(col);
        char* end = nullptr;
        const double v = std::strtod(s.c_str(), &end);
        if (end == s.c_str() || *end != '\0') throw ArgumentError("csv: cell '" + s + "' is not a number");
        return v;
    }

    void add_row(std::vector<std::string> r) { rows.push_back(std::move(r)); }
};

inline void write_csv(const std::string& path, const CsvTable& t) {
    std::ofstream out(path);
    if (!out) throw Error("cannot open '" + path + "' for writing");
    auto line = [&](const std::vector<std::string>& cells) {
        for (std::size_t i = 0; i < cells.size(); ++i) out << (i ? "," : "") << cells[i];
        out << '\n';
    };
    line(t.header);
    for (const auto& r : t.rows) line(r);
}

inline CsvTable read_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open '" + path + "' for reading");
    CsvTable t;
    std::string line;
    bool first = true;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        std::vector<std::string> cells;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) cells.push_back(cell);
        if (first) {
            t.header = std::move(cells);
            first = false;
        } else {
            if (cells.size() != t.header.size())
                throw ArgumentError("csv: row width does not match header in '" + path + "'");
            t.rows.push_back(std::move(cells));
        }
    }
    if (first) throw ArgumentError("csv: '" + path + "' is empty");
    return t;
}

}  // namespace wplap
