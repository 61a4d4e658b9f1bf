#pragma once

// Monte Carlo engine: empirical null distributions, tests against them,
// power estimation, and population (n -> infinity) values.

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <ctime>
#include <exception>
#include <functional>
#include <mutex>
#include <span>
#include <string>
#include <thread>
#include <vector>

#include "ccmvn/alternatives.hpp"
#include "ccmvn/cancor.hpp"
#include "ccmvn/covblocks.hpp"
#include "ccmvn/error.hpp"
#include "ccmvn/rng.hpp"
#include "ccmvn/stats.hpp"
#include "ccmvn/version.hpp"

namespace ccmvn {

inline constexpr long kMinReplications = 1000;

/// Sorted null values of one statistic for a fixed (n, p).
struct NullTable {
    StatisticId statistic = StatisticId::mardia_skew();
    long n = 0;
    int p = 0;
    long replications = 0;
    std::uint64_t seed = 0;
    std::vector<double> sorted_values;
    std::string created_at;
    std::string library_version = kVersion;

    friend bool operator==(const NullTable&, const NullTable&) = default;
};

struct TestResult {
    StatisticId statistic = StatisticId::mardia_skew();
    double value = 0.0;
    double p_value = 1.0;
    bool reject = false;
};

struct PowerEntry {
    StatisticId statistic = StatisticId::mardia_skew();
    double power = 0.0;
    double se = 0.0;
    long reps = 0;

    friend bool operator==(const PowerEntry&, const PowerEntry&) = default;
};

struct PowerReport {
    AlternativeSpec alternative;
    long n = 0;
    int p = 0;
    double alpha = 0.05;
    std::vector<PowerEntry> entries;

    friend bool operator==(const PowerReport&, const PowerReport&) = default;
};

/// workers == 0 means one per hardware thread. The progress callback is
/// called from worker threads, serialized, with the number of finished
/// replications.
struct RunOptions {
    unsigned workers = 0;
    std::function<void(long done, long total)> progress;
};

namespace detail {

inline unsigned resolve_workers(unsigned requested, long count) {
    unsigned w = requested ? requested : std::max(1u, std::thread::hardware_concurrency());
    if (count < static_cast<long>(w)) w = static_cast<unsigned>(std::max(1L, count));
    return w;
}

/// ISO-8601 UTC. SOURCE_DATE_EPOCH, when set, replaces the clock so that
/// reruns can produce byte-identical files.
inline std::string timestamp() {
    std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    if (const char* env = std::getenv("SOURCE_DATE_EPOCH")) {
        char* end = nullptr;
        const long long v = std::strtoll(env, &end, 10);
        if (end != env && *end == '\0') t = static_cast<std::time_t>(v);
    }
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

inline std::string null_purpose(long n, int p) {
    return "null/n=" + std::to_string(n) + "/p=" + std::to_string(p);
}

inline std::string power_purpose(const AlternativeSpec& alt, long n) {
    return "power/" + to_string(alt) + "/n=" + std::to_string(n) + "/p=" + std::to_string(alt.p);
}

inline void check_threshold(std::span<const StatisticId> stats, long n, int p) {
    for (const auto& s : stats)
        if (n < s.min_n(p))
            throw SampleSizeError(s.name() + " needs n >= " + std::to_string(s.min_n(p)) + " for p = " +
                                      std::to_string(p) + ", got n = " + std::to_string(n),
                                  s.min_n(p));
}

inline const NullTable& find_table(std::span<const NullTable> tables, const StatisticId& s) {
    for (const auto& t : tables)
        if (t.statistic == s) return t;
    throw InvalidArgument("no null table for " + s.name());
}

}  // namespace detail

/// Runs fn(i) for i in [0, count) on `workers` threads. Work is handed out
/// by index, so fn must write only to slots owned by i. The first exception
/// thrown stops the remaining work and is rethrown here.
template <class Fn>
void parallel_for(long count, const RunOptions& opt, Fn&& fn) {
    const unsigned workers = detail::resolve_workers(opt.workers, count);
    std::atomic<long> next{0};
    std::atomic<long> done{0};
    std::atomic<bool> failed{false};
    std::exception_ptr error;
    std::mutex mu;

    auto body = [&] {
        for (;;) {
            const long i = next.fetch_add(1);
            if (i >= count || failed.load()) return;
            try {
                fn(i);
            } catch (...) {
                std::lock_guard lock(mu);
                if (!failed.exchange(true)) error = std::current_exception();
                return;
            }
            const long d = done.fetch_add(1) + 1;
            if (opt.progress) {
                std::lock_guard lock(mu);
                opt.progress(d, count);
            }
        }
    };

    if (workers == 1) {
        body();
    } else {
        std::vector<std::thread> pool;
        pool.reserve(workers);
        for (unsigned w = 0; w < workers; ++w) pool.emplace_back(body);
        for (auto& t : pool) t.join();
    }
    if (error) std::rethrow_exception(error);
}

/// Simulates R standard normal samples of size n x p and evaluates every
/// requested statistic on each. Replication r draws from stream r.
inline std::vector<NullTable> calibrate(std::span<const StatisticId> stats, long n, int p, long reps,
                                        std::uint64_t seed, const RunOptions& opt = {}) {
    if (p < 1) throw InvalidArgument("calibrate: p must be positive");
    if (reps < kMinReplications)
        throw InvalidArgument("calibrate: at least " + std::to_string(kMinReplications) +
                              " replications are required, got " + std::to_string(reps));
    if (stats.empty()) throw InvalidArgument("calibrate: no statistics requested");
    detail::check_threshold(stats, n, p);

    const std::uint64_t key = derive_seed(seed, detail::null_purpose(n, p));
    const AlternativeSpec normal{.kind = AltKind::normal, .p = p};
    const std::size_t k = stats.size();
    std::vector<double> values(static_cast<std::size_t>(reps) * k);

    parallel_for(reps, opt, [&](long r) {
        Philox rng(key, static_cast<std::uint64_t>(r));
        const auto v = evaluate(Sample(generate(normal, n, rng)), stats);
        std::copy(v.begin(), v.end(), values.begin() + static_cast<std::ptrdiff_t>(static_cast<std::size_t>(r) * k));
    });

    const std::string stamp = detail::timestamp();
    std::vector<NullTable> out;
    out.reserve(k);
    for (std::size_t j = 0; j < k; ++j) {
        NullTable t;
        t.statistic = stats[j];
        t.n = n;
        t.p = p;
        t.replications = reps;
        t.seed = seed;
        t.created_at = stamp;
        t.sorted_values.resize(static_cast<std::size_t>(reps));
        for (long r = 0; r < reps; ++r)
            t.sorted_values[static_cast<std::size_t>(r)] = values[static_cast<std::size_t>(r) * k + j];
        std::sort(t.sorted_values.begin(), t.sorted_values.end());
        out.push_back(std::move(t));
    }
    return out;
}

/// (count of null values at least as extreme + 1) / (R + 1). The two-sided
/// version doubles the smaller tail and caps at one.
inline double p_value(const NullTable& t, double observed) {
    const auto& v = t.sorted_values;
    const double denom = static_cast<double>(v.size()) + 1.0;
    const auto at_least = static_cast<double>(v.end() - std::lower_bound(v.begin(), v.end(), observed));
    const auto at_most = static_cast<double>(std::upper_bound(v.begin(), v.end(), observed) - v.begin());
    const double upper = (at_least + 1.0) / denom;
    const double lower = (at_most + 1.0) / denom;
    switch (t.statistic.tail()) {
        case Tail::upper: return upper;
        case Tail::lower: return lower;
        case Tail::two_sided: return std::min(1.0, 2.0 * std::min(upper, lower));
    }
    return 1.0;
}

inline TestResult decide(const NullTable& t, double value, double alpha) {
    const double pv = p_value(t, value);
    return {t.statistic, value, pv, pv <= alpha};
}

inline void check_table(const NullTable& t, long n, int p) {
    if (t.n != n || t.p != p)
        throw InvalidArgument("null table for " + t.statistic.name() + " was calibrated at n = " + std::to_string(t.n) +
                              ", p = " + std::to_string(t.p) + " but the sample has n = " + std::to_string(n) +
                              ", p = " + std::to_string(p));
}

/// Tests x against every table, computing the moments once.
inline std::vector<TestResult> run_tests(const Sample& x, std::span<const NullTable> tables, double alpha) {
    std::vector<StatisticId> stats;
    for (const auto& t : tables) {
        check_table(t, x.n(), static_cast<int>(x.p()));
        stats.push_back(t.statistic);
    }
    const auto values = evaluate(x, stats);
    std::vector<TestResult> out;
    for (std::size_t j = 0; j < tables.size(); ++j) out.push_back(decide(tables[j], values[j], alpha));
    return out;
}

inline TestResult run_test(const Sample& x, const NullTable& table, double alpha) {
    return run_tests(x, std::span<const NullTable>(&table, 1), alpha).front();
}

/// Rejection frequency of each statistic over `reps` samples from alt.
inline PowerReport power(const AlternativeSpec& alt, std::span<const StatisticId> stats, long n, double alpha,
                         long reps, std::span<const NullTable> tables, std::uint64_t seed,
                         const RunOptions& opt = {}) {
    validate(alt);
    if (reps < 1) throw InvalidArgument("power: reps must be positive");
    if (!(alpha > 0.0 && alpha < 1.0)) throw InvalidArgument("power: alpha must lie in (0, 1)");
    std::vector<const NullTable*> use;
    for (const auto& s : stats) {
        const NullTable& t = detail::find_table(tables, s);
        check_table(t, n, alt.p);
        use.push_back(&t);
    }
    detail::check_threshold(stats, n, alt.p);

    const std::uint64_t key = derive_seed(seed, detail::power_purpose(alt, n));
    const std::size_t k = stats.size();
    std::vector<unsigned char> rejected(static_cast<std::size_t>(reps) * k);

    parallel_for(reps, opt, [&](long r) {
        Philox rng(key, static_cast<std::uint64_t>(r));
        const auto v = evaluate(Sample(generate(alt, n, rng)), stats);
        for (std::size_t j = 0; j < k; ++j)
            rejected[static_cast<std::size_t>(r) * k + j] = p_value(*use[j], v[j]) <= alpha;
    });

    PowerReport rep{alt, n, alt.p, alpha, {}};
    for (std::size_t j = 0; j < k; ++j) {
        long hits = 0;
        for (long r = 0; r < reps; ++r) hits += rejected[static_cast<std::size_t>(r) * k + j];
        const double pw = static_cast<double>(hits) / static_cast<double>(reps);
        rep.entries.push_back({stats[j], pw, std::sqrt(pw * (1.0 - pw) / static_cast<double>(reps)), reps});
    }
    return rep;
}

/// Value of the statistic as n -> infinity. PB is +infinity when a
/// population canonical correlation is one.
inline double population_value(const AlternativeSpec& alt, const StatisticId& stat) {
    switch (stat.family()) {
        case Family::mardia_skew: return mardia_beta1(population_moments(alt, 3));
        case Family::mardia_kurt: return mardia_beta2(population_moments(alt, 4));
        case Family::z2: {
            const auto f = functionals(cancor_sq(lambda_blocks_limit(population_moments(alt, 4))));
            return detail::value_or_limit(f, *stat.functional());
        }
        case Family::z3: {
            const auto f = functionals(cancor_sq(psi_blocks_limit(population_moments(alt, 6))));
            return detail::value_or_limit(f, *stat.functional());
        }
    }
    return 0.0;
}

/// All twelve population values at once, sharing the moment table.
inline std::vector<double> population_values(const AlternativeSpec& alt, std::span<const StatisticId> stats) {
    const MomentTable m = population_moments(alt, 6);
    std::optional<FunctionalSet> z2, z3;
    std::vector<double> out;
    for (const auto& s : stats) {
        switch (s.family()) {
            case Family::mardia_skew: out.push_back(mardia_beta1(m)); break;
            case Family::mardia_kurt: out.push_back(mardia_beta2(m)); break;
            case Family::z2:
                if (!z2) z2 = functionals(cancor_sq(lambda_blocks_limit(m)));
                out.push_back(detail::value_or_limit(*z2, *s.functional()));
                break;
            case Family::z3:
                if (!z3) z3 = functionals(cancor_sq(psi_blocks_limit(m)));
                out.push_back(detail::value_or_limit(*z3, *s.functional()));
                break;
        }
    }
    return out;
}

}  // namespace ccmvn
