#pragma once

#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <unordered_map>
#include <vector>

#include "rscox/core/error.hpp"

namespace rscox::io {

/// Headered comma-separated table. Fields are trimmed; quoting is not supported.
struct CsvTable {
    std::string source;
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;
    std::vector<int> lineNumbers;  // 1-based file line of each row

    int column(const std::string& name) const
    {
        for (std::size_t i = 0; i < header.size(); ++i) {
            if (header[i] == name) return static_cast<int>(i);
        }
        throw InputError(source + ": missing column '" + name + "'");
    }

    bool hasColumn(const std::string& name) const
    {
        for (const auto& h : header) {
            if (h == name) return true;
        }
        return false;
    }

    [[noreturn]] void fail(std::size_t row, const std::string& what) const
    {
        throw InputError(source + ":" + std::to_string(lineNumbers[row]) + ": " + what);
    }

    const std::string& text(std::size_t row, int col) const { return rows[row][static_cast<std::size_t>(col)]; }

    double number(std::size_t row, int col) const
    {
        const std::string& s = text(row, col);
        std::size_t used = 0;
        double v = 0.0;
        try {
            v = std::stod(s, &used);
        } catch (const std::exception&) {
            fail(row, "column '" + header[static_cast<std::size_t>(col)] + "': not a number: '" + s + "'");
        }
        if (used != s.size()) {
            fail(row, "column '" + header[static_cast<std::size_t>(col)] + "': not a number: '" + s + "'");
        }
        return v;
    }

    long integer(std::size_t row, int col) const
    {
        const std::string& s = text(row, col);
        std::size_t used = 0;
        long v = 0;
        try {
            v = std::stol(s, &used);
        } catch (const std::exception&) {
            fail(row, "column '" + header[static_cast<std::size_t>(col)] + "': not an integer: '" + s + "'");
        }
        if (used != s.size()) {
            fail(row, "column '" + header[static_cast<std::size_t>(col)] + "': not an integer: '" + s + "'");
        }
        return v;
    }
};

inline std::string trim(const std::string& s)
{
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

inline std::vector<std::string> splitCsvLine(const std::string& line)
{
    std::vector<std::string> out;
    std::string field;
    std::istringstream ss(line);
    while (std::getline(ss, field, ',')) out.push_back(trim(field));
    if (!line.empty() && line.back() == ',') out.emplace_back();
    return out;
}

inline CsvTable parseCsv(std::istream& is, const std::string& source)
{
    CsvTable t;
    t.source = source;
    std::string line;
    int lineNo = 0;
    while (std::getline(is, line)) {
        ++lineNo;
        const std::string trimmed = trim(line);
        if (trimmed.empty() || trimmed[0] == '#') continue;
        auto fields = splitCsvLine(trimmed);
        if (t.header.empty()) {
            t.header = std::move(fields);
            continue;
        }
        if (fields.size() != t.header.size()) {
            throw InputError(source + ":" + std::to_string(lineNo) + ": expected " + std::to_string(t.header.size()) +
                             " fields, got " + std::to_string(fields.size()));
        }
        t.rows.push_back(std::move(fields));
        t.lineNumbers.push_back(lineNo);
    }
    if (t.header.empty()) throw InputError(source + ": empty file (no header)");
    return t;
}

inline CsvTable readCsv(const std::string& path)
{
    std::ifstream in(path);
    if (!in) throw InputError("cannot open '" + path + "'");
    return parseCsv(in, path);
}

/// Shortest round-trip text for a double.
inline std::string formatDouble(double v)
{
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

}  // namespace rscox::io
