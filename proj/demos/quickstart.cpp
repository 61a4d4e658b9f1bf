// Draws a skewed sample, evaluates all twelve statistics, and tests them
// against freshly simulated null distributions.

#include <cstdio>

#include "ccmvn/alternatives.hpp"
#include "ccmvn/montecarlo.hpp"
#include "ccmvn/stats.hpp"

int main() {
    using namespace ccmvn;
    const long n = 50;
    const int p = 2;

    Philox rng(derive_seed(1, "demo"), 0);
    const Sample x(generate(parse_alternative("chisq:df=8", p), n, rng));

    std::printf("calibrating null tables (n = %ld, p = %d, R = 2000)...\n", n, p);
    const auto tables = calibrate(kAllStatistics, n, p, 2000, 42);

    std::printf("%-8s %12s %8s\n", "stat", "value", "p-value");
    for (const auto& r : run_tests(x, tables, 0.05))
        std::printf("%-8s %12.6g %8.4f%s\n", r.statistic.name().c_str(), r.value, r.p_value, r.reject ? "  *" : "");

    const auto pop = population_values(parse_alternative("chisq:df=8", p), kAllStatistics);
    std::printf("\npopulation values (n -> infinity):\n");
    for (std::size_t j = 0; j < kAllStatistics.size(); ++j)
        std::printf("%-8s %12.6g\n", kAllStatistics[j].name().c_str(), pop[j]);
}
