#pragma once

// Minimal CSV with exact double round-trip (shortest to_chars form) and
// '#'-prefixed comment lines for provenance.

#include "cavitycool/errors.hpp"

#include <charconv>
#include <fstream>
#include <sstream>
#include <string>
#include <system_error>
#include <vector>

namespace cavitycool {

inline std::string format_double(double v)
{
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

inline double parse_double(std::string_view s)
{
    double v = 0.0;
    const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc() || res.ptr != s.data() + s.size())
        throw ConfigError("invalid number in CSV: '" + std::string(s) + "'");
    return v;
}

struct CsvTable {
    std::vector<std::string> comments; // written as "# <text>"
    std::vector<std::string> header;
    std::vector<std::vector<double>> rows;

    void write(std::ostream& out) const
    {
        for (const auto& c : comments)
            out << "# " << c << '\n';
        for (std::size_t i = 0; i < header.size(); ++i)
            out << (i ? "," : "") << header[i];
        out << '\n';
        for (const auto& row : rows) {
            for (std::size_t i = 0; i < row.size(); ++i)
                out << (i ? "," : "") << format_double(row[i]);
            out << '\n';
        }
    }

    void save(const std::string& path) const
    {
        std::ofstream out(path);
        if (!out)
            throw ConfigError("cannot open output file: " + path);
        write(out);
    }

    static CsvTable read(std::istream& in)
    {
        CsvTable t;
        std::string line;
        bool have_header = false;
        while (std::getline(in, line)) {
            if (line.empty())
                continue;
            if (line[0] == '#') {
                t.comments.push_back(line.size() > 2 ? line.substr(2) : std::string());
                continue;
            }
            std::vector<std::string> cells;
            std::stringstream ss(line);
            std::string cell;
            while (std::getline(ss, cell, ','))
                cells.push_back(cell);
            if (!have_header) {
                t.header = std::move(cells);
                have_header = true;
                continue;
            }
            std::vector<double> row;
            row.reserve(cells.size());
            for (const auto& c : cells)
                row.push_back(parse_double(c));
            t.rows.push_back(std::move(row));
        }
        return t;
    }

    static CsvTable load(const std::string& path)
    {
        std::ifstream in(path);
        if (!in)
            throw ConfigError("cannot open CSV: " + path);
        return read(in);
    }
};

} // namespace cavitycool
