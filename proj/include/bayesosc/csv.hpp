#pragma once

// Minimal CSV emission and ingestion for experiment results.
//
// Numbers are rendered with std::to_chars in shortest round-trip form, so a
// value re-parsed from the file reproduces the original double bit for bit and
// identical runs produce byte-identical files.

#include <charconv>
#include <cmath>
#include <cstdint>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include "bayesosc/errors.hpp"

namespace bayesosc::io {

inline constexpr const char* kModuleName = "cli_io";

// Shortest decimal string that parses back to exactly `value`.
inline std::string format_number(double value) {
    char buffer[32];
    const auto result = std::to_chars(buffer, buffer + sizeof(buffer), value);
    if (result.ec != std::errc())
        throw InternalError(kModuleName, "number formatting failed");
    return std::string(buffer, result.ptr);
}

inline std::string format_integer(long long value) {
    char buffer[24];
    const auto result = std::to_chars(buffer, buffer + sizeof(buffer), value);
    if (result.ec != std::errc())
        throw InternalError(kModuleName, "integer formatting failed");
    return std::string(buffer, result.ptr);
}

// Column-schema-checked table: every row must match the header width.
class CsvTable {
public:
    explicit CsvTable(std::vector<std::string> header) : header_(std::move(header)) {
        if (header_.empty())
            throw ValidationError(kModuleName, "CSV header needs at least one column");
    }

    const std::vector<std::string>& header() const { return header_; }
    const std::vector<std::vector<std::string>>& rows() const { return rows_; }

    void add_row(std::vector<std::string> row) {
        if (row.size() != header_.size())
            throw ValidationError(kModuleName,
                                  "CSV row width " + std::to_string(row.size()) +
                                      " does not match header width " +
                                      std::to_string(header_.size()));
        rows_.push_back(std::move(row));
    }

    std::string to_string() const {
        std::string out = join(header_);
        for (const auto& row : rows_) {
            out += '\n';
            out += join(row);
        }
        out += '\n';
        return out;
    }

private:
    static std::string join(const std::vector<std::string>& cells) {
        std::string line;
        for (std::size_t i = 0; i < cells.size(); ++i) {
            if (i) line += ',';
            line += cells[i];
        }
        return line;
    }

    std::vector<std::string> header_;
    std::vector<std::vector<std::string>> rows_;
};

struct ParsedCsv {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;
};

// Strict reader for the dialect CsvTable writes: comma-separated, newline
// rows, no quoting, uniform width.
inline ParsedCsv parse_csv(std::string_view text) {
    ParsedCsv parsed;
    std::size_t pos = 0;
    bool first = true;
    while (pos < text.size()) {
        std::size_t end = text.find('\n', pos);
        if (end == std::string_view::npos) end = text.size();
        const std::string_view line = text.substr(pos, end - pos);
        pos = end + 1;
        if (line.empty()) continue;
        std::vector<std::string> cells;
        std::size_t cell_start = 0;
        while (true) {
            const std::size_t comma = line.find(',', cell_start);
            if (comma == std::string_view::npos) {
                cells.emplace_back(line.substr(cell_start));
                break;
            }
            cells.emplace_back(line.substr(cell_start, comma - cell_start));
            cell_start = comma + 1;
        }
        if (first) {
            parsed.header = std::move(cells);
            first = false;
        } else {
            if (cells.size() != parsed.header.size())
                throw ValidationError(kModuleName,
                                      "CSV row width does not match its header");
            parsed.rows.push_back(std::move(cells));
        }
    }
    if (first) throw ValidationError(kModuleName, "CSV text has no header line");
    return parsed;
}

// Parses a CSV cell as a finite double; throws a named error otherwise.
inline double parse_numeric_cell(const std::string& cell) {
    double value = 0.0;
    const auto result = std::from_chars(cell.data(), cell.data() + cell.size(), value);
    if (result.ec != std::errc() || result.ptr != cell.data() + cell.size())
        throw ValidationError(kModuleName, "CSV cell '" + cell + "' is not numeric");
    if (!std::isfinite(value))
        throw ValidationError(kModuleName, "CSV cell '" + cell + "' is not finite");
    return value;
}

}  // namespace bayesosc::io
