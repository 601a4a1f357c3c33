// SPDX-License-Identifier: MIT
#pragma once

#include "delayctl/core/errors.hpp"

#include <cmath>
#include <cstdlib>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <variant>
#include <vector>

namespace delayctl {

/// Shortest round-trip decimal form; the same double always prints the same bytes.
[[nodiscard]] inline std::string format_number(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    if (v == 0.0) return "0";
    char buf[32];
    for (int prec = 6; prec <= 17; ++prec) {
        std::snprintf(buf, sizeof buf, "%.*g", prec, v);
        if (std::strtod(buf, nullptr) == v) break;
    }
    return buf;
}

/// In-memory table written in one go; columns are fixed at construction.
class CsvTable {
public:
    using Cell = std::variant<double, long long, std::string>;

    explicit CsvTable(std::vector<std::string> header) : header_(std::move(header)) {
        if (header_.empty()) throw ValidationError("CsvTable: no columns");
    }

    void add(std::vector<Cell> row) {
        if (row.size() != header_.size())
            throw DimensionError("CsvTable: row has " + std::to_string(row.size()) + " cells, header has " +
                                 std::to_string(header_.size()));
        rows_.push_back(std::move(row));
    }

    [[nodiscard]] std::size_t rows() const noexcept { return rows_.size(); }
    [[nodiscard]] const std::vector<std::string>& header() const noexcept { return header_; }

    [[nodiscard]] std::string str() const {
        std::ostringstream out;
        write_row(out, header_);
        for (const auto& r : rows_) {
            std::vector<std::string> cells;
            for (const auto& c : r) cells.push_back(cell_text(c));
            write_row(out, cells);
        }
        return out.str();
    }

    void save(const std::string& path) const {
        std::ofstream f(path, std::ios::binary);
        if (!f) throw ValidationError("cannot write " + path);
        f << str();
    }

private:
    static std::string cell_text(const Cell& c) {
        if (const auto* d = std::get_if<double>(&c)) return format_number(*d);
        if (const auto* i = std::get_if<long long>(&c)) return std::to_string(*i);
        return std::get<std::string>(c);
    }

    static void write_row(std::ostringstream& out, const std::vector<std::string>& cells) {
        for (std::size_t i = 0; i < cells.size(); ++i) {
            if (i) out << ',';
            const std::string& s = cells[i];
            if (s.find_first_of(",\"\n") != std::string::npos) {
                out << '"';
                for (char ch : s) out << (ch == '"' ? "\"\"" : std::string(1, ch));
                out << '"';
            } else {
                out << s;
            }
        }
        out << '\n';
    }

    std::vector<std::string> header_;
    std::vector<std::vector<Cell>> rows_;
};

/// Minimal reader for the tables this project writes (no quoted newlines).
struct CsvData {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;

    [[nodiscard]] int column(const std::string& name) const {
        for (std::size_t i = 0; i < header.size(); ++i)
            if (header[i] == name) return static_cast<int>(i);
        throw ValidationError("csv: no column '" + name + "'");
    }
};

[[nodiscard]] inline std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> out;
    std::string cur;
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        const char ch = line[i];
        if (quoted) {
            if (ch == '"' && i + 1 < line.size() && line[i + 1] == '"') {
                cur += '"';
                ++i;
            } else if (ch == '"') {
                quoted = false;
            } else {
                cur += ch;
            }
        } else if (ch == '"') {
            quoted = true;
        } else if (ch == ',') {
            out.push_back(cur);
            cur.clear();
        } else if (ch != '\r') {
            cur += ch;
        }
    }
    out.push_back(cur);
    return out;
}

[[nodiscard]] inline CsvData parse_csv(const std::string& text) {
    CsvData d;
    std::istringstream in(text);
    std::string line;
    bool first = true;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        auto cells = split_csv_line(line);
        if (first) {
            d.header = std::move(cells);
            first = false;
        } else {
            if (cells.size() != d.header.size()) throw ValidationError("csv: ragged row");
            d.rows.push_back(std::move(cells));
        }
    }
    if (first) throw ValidationError("csv: empty input");
    return d;
}

}  // namespace delayctl
