#pragma once

// Null tables on disk, and power reports as CSV or JSON.
//
// A null-table file is one line of JSON metadata followed by the sorted
// values as little-endian IEEE doubles. The header carries the payload
// length and an FNV-1a checksum of the payload bytes.

#include <bit>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <iomanip>
#include <iterator>
#include <ostream>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "ccmvn/alternatives.hpp"
#include "ccmvn/error.hpp"
#include "ccmvn/montecarlo.hpp"
#include "ccmvn/stats.hpp"

namespace ccmvn {

inline constexpr int kNullFormatVersion = 1;
inline constexpr const char* kNullFormatName = "ccmvn-null-table";

namespace detail {

inline std::uint64_t fnv1a64(std::string_view bytes) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (char c : bytes) h = (h ^ static_cast<unsigned char>(c)) * 0x100000001b3ULL;
    return h;
}

inline std::string hex64(std::uint64_t v) {
    std::ostringstream os;
    os << std::hex << std::setw(16) << std::setfill('0') << v;
    return os.str();
}

inline std::string encode_le(std::span<const double> values) {
    std::string out(values.size() * 8, '\0');
    for (std::size_t i = 0; i < values.size(); ++i) {
        const auto bits = std::bit_cast<std::uint64_t>(values[i]);
        for (int b = 0; b < 8; ++b) out[i * 8 + static_cast<std::size_t>(b)] = static_cast<char>((bits >> (8 * b)) & 0xFF);
    }
    return out;
}

inline std::vector<double> decode_le(std::string_view bytes) {
    std::vector<double> out(bytes.size() / 8);
    for (std::size_t i = 0; i < out.size(); ++i) {
        std::uint64_t bits = 0;
        for (int b = 0; b < 8; ++b)
            bits |= static_cast<std::uint64_t>(static_cast<unsigned char>(bytes[i * 8 + static_cast<std::size_t>(b)]))
                    << (8 * b);
        out[i] = std::bit_cast<double>(bits);
    }
    return out;
}

inline std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw StoreError(StoreError::Kind::io, "cannot open '" + path + "' for reading");
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

inline void write_file(const std::string& path, std::string_view bytes) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw StoreError(StoreError::Kind::io, "cannot open '" + path + "' for writing");
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    out.close();
    if (!out) throw StoreError(StoreError::Kind::io, "failed writing '" + path + "'");
}

}  // namespace detail

/// Conventional file name for a table, e.g. "z2_hl_n20_p2.null".
inline std::string null_file_name(const StatisticId& s, long n, int p) {
    return s.name() + "_n" + std::to_string(n) + "_p" + std::to_string(p) + ".null";
}

inline std::string serialize_null(const NullTable& t) {
    const std::string payload = detail::encode_le(t.sorted_values);
    const nlohmann::ordered_json header = {
        {"format", kNullFormatName},
        {"format_version", kNullFormatVersion},
        {"statistic", t.statistic.name()},
        {"n", t.n},
        {"p", t.p},
        {"replications", t.replications},
        {"seed", t.seed},
        {"library_version", t.library_version},
        {"created_at", t.created_at},
        {"payload_bytes", payload.size()},
        {"checksum_fnv1a64", detail::hex64(detail::fnv1a64(payload))},
    };
    return header.dump() + "\n" + payload;
}

inline NullTable deserialize_null(std::string_view bytes) {
    using Kind = StoreError::Kind;
    const auto newline = bytes.find('\n');
    if (newline == std::string_view::npos) throw StoreError(Kind::corrupt, "null table: missing header line");
    nlohmann::json h;
    try {
        h = nlohmann::json::parse(bytes.substr(0, newline));
    } catch (const nlohmann::json::exception& e) {
        throw StoreError(Kind::corrupt, std::string("null table: unreadable header: ") + e.what());
    }
    NullTable t;
    std::uint64_t payload_bytes = 0;
    std::string checksum;
    try {
        if (h.at("format").get<std::string>() != kNullFormatName)
            throw StoreError(Kind::corrupt, "null table: not a null-table file");
        const int version = h.at("format_version").get<int>();
        if (version != kNullFormatVersion)
            throw StoreError(Kind::version, "null table: unsupported format_version " + std::to_string(version));
        t.statistic = parse_statistic(h.at("statistic").get<std::string>());
        t.n = h.at("n").get<long>();
        t.p = h.at("p").get<int>();
        t.replications = h.at("replications").get<long>();
        t.seed = h.at("seed").get<std::uint64_t>();
        t.library_version = h.at("library_version").get<std::string>();
        t.created_at = h.at("created_at").get<std::string>();
        payload_bytes = h.at("payload_bytes").get<std::uint64_t>();
        checksum = h.at("checksum_fnv1a64").get<std::string>();
    } catch (const nlohmann::json::exception& e) {
        throw StoreError(Kind::corrupt, std::string("null table: bad header field: ") + e.what());
    } catch (const InvalidArgument& e) {
        throw StoreError(Kind::corrupt, std::string("null table: ") + e.what());
    }
    if (t.replications < 0 || payload_bytes != static_cast<std::uint64_t>(t.replications) * 8)
        throw StoreError(Kind::length_mismatch, "null table: header declares " + std::to_string(t.replications) +
                                                    " replications but " + std::to_string(payload_bytes) +
                                                    " payload bytes");
    const std::string_view payload = bytes.substr(newline + 1);
    if (payload.size() != payload_bytes)
        throw StoreError(Kind::integrity, "null table: expected " + std::to_string(payload_bytes) +
                                              " payload bytes, found " + std::to_string(payload.size()));
    if (detail::hex64(detail::fnv1a64(payload)) != checksum)
        throw StoreError(Kind::integrity, "null table: payload checksum mismatch");
    t.sorted_values = detail::decode_le(payload);
    if (!std::is_sorted(t.sorted_values.begin(), t.sorted_values.end()))
        throw StoreError(Kind::integrity, "null table: payload is not sorted");
    return t;
}

inline void save_null(const NullTable& t, const std::string& path) { detail::write_file(path, serialize_null(t)); }

inline NullTable load_null(const std::string& path) { return deserialize_null(detail::read_file(path)); }

// -- reports -----------------------------------------------------------------

enum class ReportFormat { csv, json };

namespace detail {

inline std::string csv_field(const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += '"';
        out += c;
    }
    return out + "\"";
}

inline nlohmann::ordered_json report_json(const PowerReport& r) {
    nlohmann::ordered_json entries = nlohmann::ordered_json::array();
    for (const auto& e : r.entries)
        entries.push_back({{"statistic", e.statistic.name()}, {"power", e.power}, {"se", e.se}, {"reps", e.reps}});
    return {{"alternative", to_string(r.alternative)},
            {"n", r.n},
            {"p", r.p},
            {"alpha", r.alpha},
            {"entries", entries}};
}

inline PowerReport report_from_json(const nlohmann::json& j) {
    PowerReport r;
    r.p = j.at("p").get<int>();
    r.alternative = parse_alternative(j.at("alternative").get<std::string>(), r.p);
    r.n = j.at("n").get<long>();
    r.alpha = j.at("alpha").get<double>();
    for (const auto& e : j.at("entries"))
        r.entries.push_back({parse_statistic(e.at("statistic").get<std::string>()), e.at("power").get<double>(),
                             e.at("se").get<double>(), e.at("reps").get<long>()});
    return r;
}

}  // namespace detail

inline void write_reports_csv(std::span<const PowerReport> reports, std::ostream& os) {
    os << "alternative,n,p,statistic,power,se,reps\n";
    for (const auto& r : reports)
        for (const auto& e : r.entries)
            os << detail::csv_field(to_string(r.alternative)) << ',' << r.n << ',' << r.p << ','
               << e.statistic.name() << ',' << detail::format_number(e.power) << ','
               << detail::format_number(e.se) << ',' << e.reps << '\n';
}

/// One report serializes as an object, several as an array of objects.
inline std::string reports_json(std::span<const PowerReport> reports) {
    if (reports.size() == 1) return detail::report_json(reports.front()).dump(2) + "\n";
    nlohmann::ordered_json arr = nlohmann::ordered_json::array();
    for (const auto& r : reports) arr.push_back(detail::report_json(r));
    return arr.dump(2) + "\n";
}

inline std::vector<PowerReport> parse_reports_json(std::string_view text) {
    try {
        const auto j = nlohmann::json::parse(text);
        std::vector<PowerReport> out;
        if (j.is_array())
            for (const auto& item : j) out.push_back(detail::report_from_json(item));
        else
            out.push_back(detail::report_from_json(j));
        return out;
    } catch (const nlohmann::json::exception& e) {
        throw StoreError(StoreError::Kind::corrupt, std::string("report: ") + e.what());
    }
}

inline void export_reports(std::span<const PowerReport> reports, ReportFormat format, const std::string& path) {
    std::ostringstream os;
    if (format == ReportFormat::csv)
        write_reports_csv(reports, os);
    else
        os << reports_json(reports);
    detail::write_file(path, os.str());
}

inline void export_report(const PowerReport& report, ReportFormat format, const std::string& path) {
    export_reports(std::span<const PowerReport>(&report, 1), format, path);
}

inline std::vector<PowerReport> load_reports_json(const std::string& path) {
    return parse_reports_json(detail::read_file(path));
}

}  // namespace ccmvn
