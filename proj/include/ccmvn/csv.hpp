#pragma once

// Plain numeric CSV: comma separated, '.' decimal point, optional header
// row recognized by containing a non-numeric cell.

#include <charconv>
#include <cmath>
#include <istream>
#include <optional>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

#include "ccmvn/alternatives.hpp"
#include "ccmvn/error.hpp"
#include "ccmvn/moments.hpp"

namespace ccmvn {

namespace detail {

inline std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
    return s;
}

inline std::vector<std::string_view> split_commas(std::string_view line) {
    std::vector<std::string_view> cells;
    for (;;) {
        const auto comma = line.find(',');
        cells.push_back(trim(line.substr(0, comma)));
        if (comma == std::string_view::npos) return cells;
        line.remove_prefix(comma + 1);
    }
}

/// Locale-independent; rejects partial parses and non-finite values.
inline std::optional<double> parse_cell(std::string_view s) {
    if (!s.empty() && s.front() == '+') s.remove_prefix(1);
    double v = 0.0;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (s.empty() || ec != std::errc() || ptr != s.data() + s.size() || !std::isfinite(v)) return std::nullopt;
    return v;
}

}  // namespace detail

struct CsvData {
    std::vector<std::string> header;  ///< empty when the file had none
    Matrix values;
};

/// Reads an n x p table. Blank lines are skipped; rows and columns in
/// error messages are 1-based file positions.
inline CsvData read_csv(std::istream& in) {
    CsvData out;
    std::vector<std::vector<double>> rows;
    std::size_t width = 0;
    std::string line;
    long line_no = 0;
    bool first = true;
    while (std::getline(in, line)) {
        ++line_no;
        std::string_view view(line);
        if (line_no == 1 && view.substr(0, 3) == "\xEF\xBB\xBF") view.remove_prefix(3);
        if (detail::trim(view).empty()) continue;
        const auto cells = detail::split_commas(view);
        if (first) {
            first = false;
            width = cells.size();
            bool numeric = true;
            for (auto c : cells) numeric = numeric && detail::parse_cell(c).has_value();
            if (!numeric) {
                for (auto c : cells) out.header.emplace_back(c);
                continue;
            }
        }
        if (cells.size() != width)
            throw DataError("line " + std::to_string(line_no) + ": expected " + std::to_string(width) +
                                " columns, found " + std::to_string(cells.size()),
                            line_no, 0);
        std::vector<double> row;
        row.reserve(width);
        for (std::size_t c = 0; c < cells.size(); ++c) {
            const auto v = detail::parse_cell(cells[c]);
            if (!v)
                throw DataError("line " + std::to_string(line_no) + ", column " + std::to_string(c + 1) +
                                    ": not a finite number: '" + std::string(cells[c]) + "'",
                                line_no, static_cast<long>(c + 1));
            row.push_back(*v);
        }
        rows.push_back(std::move(row));
    }
    if (rows.empty()) throw DataError("no data rows", 0, 0);
    out.values.resize(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(width));
    for (std::size_t r = 0; r < rows.size(); ++r)
        for (std::size_t c = 0; c < width; ++c)
            out.values(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = rows[r][c];
    return out;
}

/// Writes values so that read_csv returns them bit for bit.
inline void write_csv(const Matrix& values, std::ostream& os, const std::vector<std::string>& header = {}) {
    for (std::size_t c = 0; c < header.size(); ++c) os << (c ? "," : "") << header[c];
    if (!header.empty()) os << '\n';
    for (Eigen::Index r = 0; r < values.rows(); ++r) {
        for (Eigen::Index c = 0; c < values.cols(); ++c) os << (c ? "," : "") << detail::format_number(values(r, c));
        os << '\n';
    }
}

}  // namespace ccmvn
