// Command-line front end: calibrate null tables, test data files, estimate
// power, print population values and reproduce the simulation tables.

#include <CLI11.hpp>

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "ccmvn/alternatives.hpp"
#include "ccmvn/csv.hpp"
#include "ccmvn/montecarlo.hpp"
#include "ccmvn/stats.hpp"
#include "ccmvn/store.hpp"
#include "ccmvn/version.hpp"

namespace fs = std::filesystem;
using namespace ccmvn;

namespace {

enum Exit { kOk = 0, kUsage = 2, kData = 3, kComputation = 4 };

constexpr const char* kNullDirEnv = "CCMVN_NULL_DIR";
constexpr const char* kOmnibusMarker = "n/a (omnibus T not implemented)";

struct Common {
    std::uint64_t seed = 42;
    long reps = 10000;
    double alpha = 0.05;
    unsigned workers = 0;
    std::string null_dir;
    std::string stats = "all";
    bool quiet = false;
};

std::vector<StatisticId> statistic_list(const std::string& text) {
    if (text == "all") return {kAllStatistics.begin(), kAllStatistics.end()};
    std::vector<StatisticId> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ','))
        if (!item.empty()) out.push_back(parse_statistic(item));
    if (out.empty()) throw InvalidArgument("no statistics selected");
    return out;
}

std::string default_null_dir() {
    const char* env = std::getenv(kNullDirEnv);
    return env && *env ? env : "nulls";
}

RunOptions run_options(const Common& c, const std::string& label) {
    RunOptions o;
    o.workers = c.workers;
    if (!c.quiet)
        o.progress = [label](long done, long total) {
            const long step = std::max(1L, total / 10);
            if (done % step == 0 || done == total)
                std::cerr << label << ": " << done << "/" << total << " replications\n";
        };
    return o;
}

std::vector<NullTable> load_tables(const std::string& dir, const std::vector<StatisticId>& stats, long n, int p) {
    std::vector<NullTable> out;
    for (const auto& s : stats) {
        const fs::path path = fs::path(dir) / null_file_name(s, n, p);
        if (!fs::exists(path))
            throw StoreError(StoreError::Kind::io, "missing null table for statistic " + s.name() + ", n = " +
                                                       std::to_string(n) + ", p = " + std::to_string(p) + " (expected " +
                                                       path.string() + "; run 'ccmvn calibrate --n " +
                                                       std::to_string(n) + " --p " + std::to_string(p) + "')");
        out.push_back(load_null(path.string()));
    }
    return out;
}

std::string fmt(double v, int digits = 6) {
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*g", digits, v);
    return buf;
}

void write_output(const std::string& path, const std::string& text) {
    if (path.empty() || path == "-") {
        std::cout << text;
        return;
    }
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw StoreError(StoreError::Kind::io, "cannot open '" + path + "' for writing");
    out << text;
}

// -- subcommands --------------------------------------------------------------

int cmd_calibrate(const Common& c, long n, int p, const std::string& out_dir) {
    const auto stats = statistic_list(c.stats);
    auto tables = calibrate(stats, n, p, c.reps, c.seed,
                            run_options(c, "calibrate n=" + std::to_string(n) + " p=" + std::to_string(p)));
    fs::create_directories(out_dir);
    for (const auto& t : tables) {
        const fs::path path = fs::path(out_dir) / null_file_name(t.statistic, n, p);
        save_null(t, path.string());
        if (!c.quiet) std::cerr << "wrote " << path.string() << "\n";
    }
    return kOk;
}

int cmd_test(const Common& c, const std::string& data_path, const std::vector<std::string>& table_files,
             const std::string& json_path) {
    std::ifstream in(data_path);
    if (!in) throw DataError("cannot open data file '" + data_path + "'", 0, 0);
    const auto data = read_csv(in);
    const Sample x(data.values);
    const long n = static_cast<long>(x.n());
    const int p = static_cast<int>(x.p());

    std::vector<NullTable> tables;
    if (!table_files.empty()) {
        for (const auto& f : table_files) tables.push_back(load_null(f));
    } else {
        tables = load_tables(c.null_dir, statistic_list(c.stats), n, p);
    }
    const auto results = run_tests(x, tables, c.alpha);

    std::printf("n = %ld, p = %d, alpha = %s\n", n, p, fmt(c.alpha).c_str());
    std::printf("%-8s %14s %10s  %s\n", "stat", "value", "p-value", "reject");
    for (const auto& r : results)
        std::printf("%-8s %14s %10s  %s\n", r.statistic.name().c_str(), fmt(r.value, 8).c_str(),
                    fmt(r.p_value, 4).c_str(), r.reject ? "yes" : "no");

    if (!json_path.empty()) {
        nlohmann::ordered_json j = {{"n", n}, {"p", p}, {"alpha", c.alpha}, {"results", nlohmann::ordered_json::array()}};
        for (const auto& r : results)
            j["results"].push_back({{"statistic", r.statistic.name()},
                                    {"value", std::isinf(r.value) ? nlohmann::ordered_json("inf") : nlohmann::ordered_json(r.value)},
                                    {"p_value", r.p_value},
                                    {"reject", r.reject}});
        write_output(json_path, j.dump(2) + "\n");
    }
    return kOk;
}

int cmd_power(const Common& c, const std::string& alt_text, long n, int p, const std::string& out,
              const std::string& format) {
    const auto alt = parse_alternative(alt_text, p);
    const auto stats = statistic_list(c.stats);
    const auto tables = load_tables(c.null_dir, stats, n, p);
    const auto report = power(alt, stats, n, c.alpha, c.reps, tables, c.seed, run_options(c, "power " + alt_text));

    std::printf("%s, n = %ld, p = %d, alpha = %s, reps = %ld\n", display_name(alt).c_str(), n, p,
                fmt(c.alpha).c_str(), c.reps);
    std::printf("%-8s %8s %8s\n", "stat", "power", "se");
    for (const auto& e : report.entries)
        std::printf("%-8s %8.4f %8.4f\n", e.statistic.name().c_str(), e.power, e.se);
    std::printf("%-8s %s\n", "T", kOmnibusMarker);

    if (!out.empty()) {
        const bool json = format == "json" || (format.empty() && fs::path(out).extension() == ".json");
        export_report(report, json ? ReportFormat::json : ReportFormat::csv, out);
    }
    return kOk;
}

std::vector<AlternativeSpec> population_rows(const std::string& alt_text, int p) {
    std::vector<AlternativeSpec> rows;
    if (!alt_text.empty()) {
        rows.push_back(parse_alternative(alt_text, p));
    } else {
        rows.push_back(parse_alternative("normal", p));
        for (const auto& text : catalog()) rows.push_back(parse_alternative(text, p));
    }
    return rows;
}

std::string stat_header(std::span<const StatisticId> stats, const std::string& prefix = "") {
    std::string out;
    for (const auto& s : stats) out += "," + prefix + s.name();
    return out;
}

std::string population_line(const AlternativeSpec& alt) {
    std::string line = detail::csv_field(display_name(alt)) + "," + detail::csv_field(to_string(alt)) + "," +
                       std::to_string(alt.p);
    if (alt.kind == AltKind::t2) {
        for (std::size_t j = 0; j < kAllStatistics.size(); ++j) line += ",--";
    } else {
        for (double v : population_values(alt, kAllStatistics)) line += "," + fmt(v);
    }
    return line + "\n";
}

int cmd_popvalues(const std::string& alt_text, int p, const std::string& out) {
    std::string text = "alternative,spec,p" + stat_header(kAllStatistics) + "\n";
    for (const auto& alt : population_rows(alt_text, p)) text += population_line(alt);
    write_output(out, text);
    return kOk;
}

int cmd_tables(const Common& c, const std::string& which, long calib_reps, const std::string& out) {
    std::string text;
    if (which == "altpop") {
        text = "alternative,spec,p" + stat_header(kAllStatistics) + "\n";
        for (const auto& alt : population_rows("", 2)) {
            for (int p : {2, 3}) {
                auto a = alt;
                a.p = p;
                text += population_line(a);
            }
        }
        write_output(out, text);
        return kOk;
    }
    const int p = which == "2" ? 2 : 3;
    // The twelve columns, plus kurtosis tested in the upper tail only.
    std::vector<StatisticId> stats(kAllStatistics.begin(), kAllStatistics.end());
    stats.push_back(StatisticId::mardia_kurt_upper());
    text = "alternative,spec,n,T" + stat_header(stats) + stat_header(stats, "se_") + "\n";
    std::vector<std::vector<NullTable>> nulls;
    for (long n : {20L, 50L})
        nulls.push_back(calibrate(stats, n, p, calib_reps, c.seed,
                                  run_options(c, "calibrate n=" + std::to_string(n) + " p=" + std::to_string(p))));
    Common quiet = c;
    quiet.quiet = true;
    for (const auto& spec_text : catalog()) {
        const auto alt = parse_alternative(spec_text, p);
        for (std::size_t k = 0; k < 2; ++k) {
            const long n = k == 0 ? 20 : 50;
            const auto rep = power(alt, stats, n, c.alpha, c.reps, nulls[k], c.seed, run_options(quiet, ""));
            std::string line = detail::csv_field(display_name(alt)) + "," + detail::csv_field(spec_text) + "," +
                               std::to_string(n) + "," + kOmnibusMarker;
            for (const auto& e : rep.entries) line += "," + fmt(e.power, 4);
            for (const auto& e : rep.entries) line += "," + fmt(e.se, 3);
            text += line + "\n";
            if (!c.quiet) std::cerr << "power " << spec_text << " n=" << n << " done\n";
        }
    }
    write_output(out, text);
    return kOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Canonical-correlation tests for multivariate normality"};
    app.set_version_flag("--version", kVersion);
    app.require_subcommand(1);

    Common c;
    c.null_dir = default_null_dir();
    auto add_common = [&](CLI::App* sub, bool reps, bool alpha, bool stats) {
        sub->add_option("--seed", c.seed, "Random seed")->capture_default_str();
        if (reps) sub->add_option("--reps", c.reps, "Monte Carlo replications")->capture_default_str()->check(CLI::PositiveNumber);
        if (alpha) sub->add_option("--alpha", c.alpha, "Test level")->capture_default_str()->check(CLI::Range(0.0, 1.0));
        if (stats) sub->add_option("--stats", c.stats, "Comma-separated statistic names, or 'all'")->capture_default_str();
        sub->add_option("--workers", c.workers, "Worker threads (0 = all cores)")->capture_default_str();
        sub->add_flag("--quiet,-q", c.quiet, "No progress output");
    };
    auto null_dir_help = std::string("Null-table directory (default $") + kNullDirEnv + " or ./nulls)";

    long n = 0;
    int p = 0;
    std::string out, format, data, json, alt, which;
    std::vector<std::string> table_files;
    long calib_reps = 10000;

    auto* calib = app.add_subcommand("calibrate", "Simulate null distributions and save them");
    calib->add_option("--n", n, "Sample size")->required();
    calib->add_option("--p", p, "Dimension")->required()->check(CLI::PositiveNumber);
    calib->add_option("--out-dir,--null-dir", c.null_dir, null_dir_help);
    add_common(calib, true, false, true);

    auto* test = app.add_subcommand("test", "Test a CSV data set against saved null tables");
    test->add_option("--data", data, "CSV file, one observation per row")->required();
    test->add_option("--null-dir", c.null_dir, null_dir_help);
    test->add_option("--table", table_files, "Explicit null-table files instead of --null-dir");
    test->add_option("--json", json, "Also write results as JSON");
    add_common(test, false, true, true);

    auto* pow = app.add_subcommand("power", "Estimate power against an alternative");
    pow->add_option("--alt", alt, "Alternative, e.g. indep_exp or beta:a=1,b=1 (names: " + alternative_names() + ")")
        ->required();
    pow->add_option("--n", n, "Sample size")->required();
    pow->add_option("--p", p, "Dimension")->required()->check(CLI::PositiveNumber);
    pow->add_option("--null-dir", c.null_dir, null_dir_help);
    pow->add_option("--out", out, "Write the report here");
    pow->add_option("--format", format, "csv or json (default from --out extension)")
        ->check(CLI::IsMember({"csv", "json"}));
    add_common(pow, true, true, true);

    auto* pop = app.add_subcommand("popvalues", "Population (n -> infinity) values of all statistics");
    pop->add_option("--alt", alt, "One alternative (default: every tabulated one)");
    pop->add_option("--p", p, "Dimension")->required()->check(CLI::PositiveNumber);
    pop->add_option("--out", out, "CSV output path (default stdout)");

    auto* tab = app.add_subcommand("tables", "Reproduce a power or population table at desk scale");
    tab->add_option("--which", which, "2 (p = 2 power), 4 (p = 3 power) or altpop")
        ->required()
        ->check(CLI::IsMember({"2", "4", "altpop"}));
    tab->add_option("--calib-reps", calib_reps, "Replications for the null tables")->capture_default_str();
    tab->add_option("--out", out, "CSV output path (default stdout)");
    add_common(tab, true, true, false);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kOk : kUsage;
    }

    try {
        if (*calib) return cmd_calibrate(c, n, p, c.null_dir);
        if (*test) return cmd_test(c, data, table_files, json);
        if (*pow) return cmd_power(c, alt, n, p, out, format);
        if (*pop) return cmd_popvalues(alt, p, out);
        if (*tab) return cmd_tables(c, which, calib_reps, out);
    } catch (const InvalidArgument& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kUsage;
    } catch (const DataError& e) {
        std::cerr << "data error: " << e.what() << "\n";
        return kData;
    } catch (const DegenerateSample& e) {
        std::cerr << "data error: " << e.what() << "\n";
        return kData;
    } catch (const StoreError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kData;
    } catch (const Error& e) {
        std::cerr << "computation error: " << e.what() << "\n";
        return kComputation;
    } catch (const fs::filesystem_error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kData;
    }
    return kUsage;
}
