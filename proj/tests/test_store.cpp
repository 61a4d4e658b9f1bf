#include <catch2/catch_amalgamated.hpp>

#include <unistd.h>

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <json.hpp>

#include "ccmvn/csv.hpp"
#include "ccmvn/store.hpp"

using namespace ccmvn;
namespace fs = std::filesystem;

namespace {

fs::path scratch_dir() {
    static const fs::path dir = [] {
        const fs::path d = fs::temp_directory_path() / ("ccmvn_store_test_" + std::to_string(::getpid()));
        fs::create_directories(d);
        return d;
    }();
    static const struct Cleanup {
        ~Cleanup() { std::error_code ec; fs::remove_all(dir, ec); }
    } cleanup;
    return dir;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

const NullTable& sample_table() {
    static const NullTable t = [] {
        const std::array<StatisticId, 1> s{StatisticId::z2(Functional::hl)};
        return calibrate(s, 20, 2, 10000, 42).front();
    }();
    return t;
}

StoreError::Kind load_error(const std::string& bytes) {
    try {
        deserialize_null(bytes);
    } catch (const StoreError& e) {
        return e.kind();
    }
    FAIL("no error");
    return StoreError::Kind::io;
}

PowerReport small_report() {
    PowerReport r;
    r.alternative = parse_alternative("mix:w=0.9,m=1,r=0.5", 2);
    r.n = 20;
    r.p = 2;
    r.alpha = 0.05;
    r.entries = {{StatisticId::mardia_skew(), 0.1234567890123, std::sqrt(0.1234567890123 * 0.8765432109877 / 1000), 1000},
                 {StatisticId::z3(Functional::w), 1.0 / 3.0, 0.01, 1000}};
    return r;
}

}  // namespace

TEST_CASE("null table round trip", "[store]") {
    const auto path = (scratch_dir() / "z2.null").string();
    save_null(sample_table(), path);
    const NullTable back = load_null(path);
    CHECK(back == sample_table());
    CHECK(back.library_version == kVersion);
    // Header is one readable JSON line.
    const std::string bytes = slurp(path);
    const auto header = nlohmann::json::parse(bytes.substr(0, bytes.find('\n')));
    CHECK(header["format_version"] == 1);
    CHECK(header["statistic"] == "z2_hl");
    CHECK(header["replications"] == 10000);
    CHECK(bytes.size() == bytes.find('\n') + 1 + 80000);
}

TEST_CASE("payload is little-endian IEEE doubles", "[store]") {
    NullTable t;
    t.statistic = StatisticId::mardia_kurt();
    t.n = 10;
    t.p = 1;
    t.replications = 2;
    t.sorted_values = {1.0, 2.0};
    const std::string bytes = serialize_null(t);
    const std::string payload = bytes.substr(bytes.find('\n') + 1);
    // 1.0 = 0x3FF0000000000000, 2.0 = 0x4000000000000000.
    CHECK(payload == std::string("\0\0\0\0\0\0\xF0\x3F\0\0\0\0\0\0\0\x40", 16));
}

TEST_CASE("damaged null tables are rejected by kind", "[store]") {
    const std::string good = serialize_null(sample_table());
    const auto nl = good.find('\n');

    CHECK(load_error(good.substr(0, good.size() - 8)) == StoreError::Kind::integrity);
    std::string flipped = good;
    flipped[nl + 100] = static_cast<char>(flipped[nl + 100] ^ 0x01);
    CHECK(load_error(flipped) == StoreError::Kind::integrity);

    std::string version = good;
    version.replace(version.find("\"format_version\":1"), 18, "\"format_version\":7");
    CHECK(load_error(version) == StoreError::Kind::version);

    std::string length = good;
    length.replace(length.find("\"replications\":10000"), 20, "\"replications\":10001");
    CHECK(load_error(length) == StoreError::Kind::length_mismatch);

    CHECK(load_error("not json\n") == StoreError::Kind::corrupt);
    CHECK(load_error("") == StoreError::Kind::corrupt);
    CHECK(load_error("{\"format\":\"other\"}\n") == StoreError::Kind::corrupt);

    try {
        load_null((scratch_dir() / "missing.null").string());
        FAIL("expected an error");
    } catch (const StoreError& e) {
        CHECK(e.kind() == StoreError::Kind::io);
    }
}

TEST_CASE("a loaded table serves run_test", "[store]") {
    const auto path = (scratch_dir() / null_file_name(sample_table().statistic, 20, 2)).string();
    CHECK(fs::path(path).filename() == "z2_hl_n20_p2.null");
    save_null(sample_table(), path);
    const NullTable loaded = load_null(path);
    Philox rng(8, 0);
    const Sample x(generate(parse_alternative("indep_exp", 2), 20, rng));
    const auto a = run_test(x, loaded, 0.05);
    const auto b = run_test(x, sample_table(), 0.05);
    CHECK(a.p_value == b.p_value);
    CHECK(a.value == b.value);
}

TEST_CASE("report CSV", "[store]") {
    std::ostringstream empty;
    write_reports_csv({}, empty);
    CHECK(empty.str() == "alternative,n,p,statistic,power,se,reps\n");

    PowerReport no_stats = small_report();
    no_stats.entries.clear();
    std::ostringstream header_only;
    write_reports_csv(std::span<const PowerReport>(&no_stats, 1), header_only);
    CHECK(header_only.str() == empty.str());

    const std::vector<PowerReport> reports = {small_report(), small_report()};
    std::ostringstream os;
    write_reports_csv(reports, os);
    std::istringstream lines(os.str());
    std::string line;
    std::getline(lines, line);
    int rows = 0;
    while (std::getline(lines, line)) {
        ++rows;
        CHECK(line.rfind("\"mix:w=0.9,m=1,r=0.5\",20,2,", 0) == 0);
    }
    CHECK(rows == 4);
    CHECK(os.str().find("0.1234567890123,") != std::string::npos);
}

TEST_CASE("report JSON round trip", "[store]") {
    const auto path = (scratch_dir() / "report.json").string();
    export_report(small_report(), ReportFormat::json, path);
    const auto j = nlohmann::json::parse(slurp(path));
    CHECK(j["alternative"] == "mix:w=0.9,m=1,r=0.5");
    CHECK(j["entries"].size() == 2);
    CHECK(j["entries"][1]["statistic"] == "z3_w");
    const auto back = load_reports_json(path);
    REQUIRE(back.size() == 1);
    CHECK(back[0] == small_report());

    const std::vector<PowerReport> two = {small_report(), small_report()};
    CHECK(parse_reports_json(reports_json(two)) == two);
    CHECK_THROWS_AS(export_report(small_report(), ReportFormat::csv, "/nonexistent/dir/r.csv"), StoreError);
}

TEST_CASE("CSV data with and without header", "[csv]") {
    std::istringstream with("x,y\n1,2\n3.5,-4e-3\n");
    const auto a = read_csv(with);
    CHECK(a.header == std::vector<std::string>{"x", "y"});
    CHECK(a.values.rows() == 2);
    CHECK(a.values(1, 1) == -4e-3);

    std::istringstream without("\xEF\xBB\xBF" "1,2\r\n3,4\r\n\n");
    const auto b = read_csv(without);
    CHECK(b.header.empty());
    CHECK(b.values.rows() == 2);
    CHECK(b.values(1, 0) == 3.0);
}

TEST_CASE("CSV errors carry the location", "[csv]") {
    std::istringstream ragged("a,b\n1,2\n3\n");
    try {
        read_csv(ragged);
        FAIL("expected an error");
    } catch (const DataError& e) {
        CHECK(e.row() == 3);
    }
    std::istringstream bad("1,2\n3,oops\n");
    try {
        read_csv(bad);
        FAIL("expected an error");
    } catch (const DataError& e) {
        CHECK(e.row() == 2);
        CHECK(e.column() == 2);
        CHECK(std::string(e.what()).find("oops") != std::string::npos);
    }
    std::istringstream nan("1,2\n1,nan\n");
    CHECK_THROWS_AS(read_csv(nan), DataError);
    std::istringstream header_only("x,y\n");
    CHECK_THROWS_AS(read_csv(header_only), DataError);
}

TEST_CASE("CSV round trip preserves statistics exactly", "[csv]") {
    Philox rng(4, 4);
    const Matrix x = generate(parse_alternative("lognormal:v=0.125", 3), 40, rng);
    std::ostringstream os;
    write_csv(x, os, {"a", "b", "c"});
    std::istringstream is(os.str());
    const auto back = read_csv(is);
    CHECK(back.values == x);
    CHECK(evaluate(Sample(back.values), kAllStatistics) == evaluate(Sample(x), kAllStatistics));
}
