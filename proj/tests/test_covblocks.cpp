#include <catch2/catch_amalgamated.hpp>

#include <array>
#include <cmath>
#include <random>
#include <vector>

#include "ccmvn/covblocks.hpp"
#include "ccmvn/matalg.hpp"
#include "ccmvn/moments.hpp"
#include "psi_oracle.hpp"
#include "test_support.hpp"

using namespace ccmvn;
using namespace ccmvn::testing;

namespace {

// Three-point distribution in the plane, asymmetric enough that every
// moment up to order six is nonzero.
struct Discrete {
    std::vector<std::array<double, 2>> points{{0.0, 0.0}, {1.0, 2.0}, {3.0, -1.0}};
    std::vector<double> probs{0.5, 0.3, 0.2};

    std::array<double, 2> mean() const {
        std::array<double, 2> m{0.0, 0.0};
        for (std::size_t k = 0; k < points.size(); ++k)
            for (int i = 0; i < 2; ++i) m[i] += probs[k] * points[k][i];
        return m;
    }

    MomentTable moments() const {
        const auto mu = mean();
        return MomentTable::from_function(2, 6, [&](std::span<const int> idx) {
            double total = 0.0;
            for (std::size_t k = 0; k < points.size(); ++k) {
                double prod = probs[k];
                for (int i : idx) prod *= points[k][i] - mu[i];
                total += prod;
            }
            return total;
        });
    }
};

// Exact covariance of (mean, stat(sample)) by summing over all K^n samples.
template <class Stat>
Matrix exact_covariance(const Discrete& d, int n, Stat&& stat) {
    const int k = static_cast<int>(d.points.size());
    std::vector<int> choice(static_cast<std::size_t>(n), 0);
    Vector first;
    Matrix second;
    bool init = false;
    while (true) {
        Matrix x(n, 2);
        double w = 1.0;
        for (int r = 0; r < n; ++r) {
            const auto c = static_cast<std::size_t>(choice[static_cast<std::size_t>(r)]);
            x(r, 0) = d.points[c][0];
            x(r, 1) = d.points[c][1];
            w *= d.probs[c];
        }
        const Sample s(x);
        const Vector extra = stat(s);
        Vector z(2 + extra.size());
        z << sample_mean(s), extra;
        if (!init) {
            first = Vector::Zero(z.size());
            second = Matrix::Zero(z.size(), z.size());
            init = true;
        }
        first += w * z;
        second += w * z * z.transpose();

        int pos = 0;
        while (pos < n && ++choice[static_cast<std::size_t>(pos)] == k) choice[static_cast<std::size_t>(pos++)] = 0;
        if (pos == n) break;
    }
    return second - first * first.transpose();
}

Matrix assemble(const CovBlocks& b) {
    Matrix full(b.p + b.q, b.p + b.q);
    full.topLeftCorner(b.p, b.p) = b.b11;
    full.topRightCorner(b.p, b.q) = b.b12;
    full.bottomLeftCorner(b.q, b.p) = b.b12.transpose();
    full.bottomRightCorner(b.q, b.q) = b.b22;
    return full;
}

std::array<int, 6> joined(const std::vector<int>& a, const std::vector<int>& b) {
    return {a[0], a[1], a[2], b[0], b[1], b[2]};
}

}  // namespace

TEST_CASE("minimum sample sizes", "[covblocks]") {
    CHECK(second_family_min_n(1) == 2);
    CHECK(second_family_min_n(2) == 5);
    CHECK(second_family_min_n(3) == 9);
    CHECK(third_family_min_n(1) == 3);
    CHECK(third_family_min_n(2) == 6);
    CHECK(third_family_min_n(3) == 13);
    CHECK(third_family_min_n(4) == 24);
}

TEST_CASE("scheme sizes and agreement with generated orbits", "[covblocks]") {
    const auto& o = oracle_schemes();
    auto as_set = [](SchemeLabel label, bool ordered) {
        std::set<Groups> out;
        for (const auto& t : permutation_scheme(label).terms) out.insert(canonical(t.groups, ordered));
        return out;
    };
    CHECK(permutation_scheme(SchemeLabel::sum9_pair).terms.size() == 9);
    CHECK(permutation_scheme(SchemeLabel::sum9_triple).terms.size() == 9);
    CHECK(permutation_scheme(SchemeLabel::sum3_pairpair).terms.size() == 3);
    CHECK(permutation_scheme(SchemeLabel::sum6_matching).terms.size() == 6);
    CHECK(permutation_scheme(SchemeLabel::sum15_pair).terms.size() == 15);
    CHECK(permutation_scheme(SchemeLabel::sum10_triple).terms.size() == 10);
    CHECK(permutation_scheme(SchemeLabel::sum15_triplematch).terms.size() == 15);

    CHECK(as_set(SchemeLabel::sum9_pair, true) == o.pair9);
    CHECK(as_set(SchemeLabel::sum9_triple, false) == o.triple9_mixed);
    CHECK(as_set(SchemeLabel::sum6_matching, false) == o.match6);
    CHECK(as_set(SchemeLabel::sum15_pair, true) == o.pair15);
    CHECK(as_set(SchemeLabel::sum10_triple, false) == o.triple10);
    CHECK(as_set(SchemeLabel::sum15_triplematch, false) == o.match15);
    CHECK(as_set(SchemeLabel::sum3_pairpair, false) == o.pairpair3);

    // "All ten triple splits except the identity" and "the splits mixing
    // both sides" are the same nine terms.
    CHECK(o.triple9_all_but_identity == o.triple9_mixed);
}

TEST_CASE("third-family 22-block matches the permutation oracle", "[covblocks]") {
    std::mt19937_64 rng(21);
    for (int rep = 0; rep < 20; ++rep) {
        const int p = 1 + rep % 3;
        const MomentTable m = random_table(rng, p, 6);
        const long n = third_family_min_n(p) + rep;
        const CovBlocks finite = psi_blocks(m, n);
        const CovBlocks limit = psi_blocks_limit(m);
        const auto triples = multi_indices(p, 3);
        for (std::size_t a = 0; a < triples.size(); ++a) {
            for (std::size_t b = 0; b < triples.size(); ++b) {
                const auto idx = joined(triples[a], triples[b]);
                const auto ia = static_cast<Eigen::Index>(a), ib = static_cast<Eigen::Index>(b);
                CHECK(rel_diff(finite.b22(ia, ib), oracle_psi22(m, idx, n)) <= 1e-12);
                CHECK(rel_diff(limit.b22(ia, ib), oracle_psi22(m, idx, 0)) <= 1e-12);
                CHECK(rel_diff(lambda6(m, idx), oracle_lambda6(m, idx)) <= 1e-12);
            }
        }
    }
}

TEST_CASE("third-family limit equals the delta-method covariance", "[covblocks]") {
    std::mt19937_64 rng(22);
    for (int rep = 0; rep < 10; ++rep) {
        const int p = 1 + rep % 3;
        const MomentTable m = random_table(rng, p, 6);
        const CovBlocks limit = psi_blocks_limit(m);
        const auto triples = multi_indices(p, 3);
        for (std::size_t a = 0; a < triples.size(); ++a)
            for (std::size_t b = 0; b < triples.size(); ++b)
                CHECK(rel_diff(limit.b22(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b)),
                               delta_method_psi22(m, joined(triples[a], triples[b]))) <= 1e-12);
    }
}

TEST_CASE("finite-n blocks are the exact covariance of a discrete sample", "[covblocks]") {
    const Discrete d;
    const MomentTable m = d.moments();

    SECTION("second family") {
        for (int n : {5, 6}) {
            const Matrix exact = exact_covariance(d, n, [](const Sample& s) { return matalg::vech(sample_cov(s)); });
            CHECK(max_rel_diff(assemble(lambda_blocks(m, n)), exact) <= 1e-10);
        }
    }
    SECTION("third family") {
        for (int n : {6, 7}) {
            const Matrix exact = exact_covariance(d, n, [](const Sample& s) { return sample_third(s); });
            CHECK(max_rel_diff(assemble(psi_blocks(m, n)), exact) <= 1e-10);
        }
    }
}

TEST_CASE("Gaussian moments: zero sixth cumulant and zero cross blocks", "[covblocks]") {
    std::mt19937_64 rng(23);
    for (int p = 1; p <= 3; ++p) {
        const Matrix a = random_nonsingular(rng, p);
        const MomentTable m = isserlis_table(a * a.transpose());
        for (const auto& t1 : multi_indices(p, 3))
            for (const auto& t2 : multi_indices(p, 3)) CHECK(std::abs(lambda6(m, joined(t1, t2))) <= 1e-10);
        CHECK(lambda_blocks(m, 40).b12.cwiseAbs().maxCoeff() == 0.0);
        CHECK(psi_blocks(m, 40).b12.cwiseAbs().maxCoeff() <= 1e-12);
    }
}

TEST_CASE("22-blocks are symmetric", "[covblocks]") {
    std::mt19937_64 rng(24);
    for (int rep = 0; rep < 10; ++rep) {
        const MomentTable m = random_table(rng, 3, 6);
        const Matrix l = lambda_blocks(m, 30).b22;
        const Matrix s = psi_blocks(m, 30).b22;
        CHECK(max_rel_diff(l, l.transpose()) <= 1e-14);
        CHECK(max_rel_diff(s, s.transpose()) <= 1e-13);
    }
}

TEST_CASE("univariate blocks match the classical k-statistic variances", "[covblocks]") {
    std::mt19937_64 rng(25);
    const Sample x = random_skewed_sample(rng, 50, 1);
    const MomentTable m = central_moments(x, 6);
    const double m2 = m({0, 0}), m3 = m({0, 0, 0}), m4 = m({0, 0, 0, 0}), m6 = m({0, 0, 0, 0, 0, 0});
    const double n = 50.0;

    const double k4 = m4 - 3 * m2 * m2;
    const double k6 = m6 - 15 * m4 * m2 - 10 * m3 * m3 + 30 * m2 * m2 * m2;
    const double var_k3 = k6 / n + 9 * m2 * k4 / (n - 1) + 9 * m3 * m3 / (n - 1) + 6 * n * m2 * m2 * m2 / ((n - 1) * (n - 2));
    const CovBlocks psi = psi_blocks(m, 50);
    CHECK(rel_diff(psi.b22(0, 0), var_k3) <= 1e-12);
    CHECK(rel_diff(psi.b12(0, 0), k4 / n) <= 1e-12);

    const double var_k2 = k4 / n + 2 * m2 * m2 / (n - 1);
    const CovBlocks lam = lambda_blocks(m, 50);
    CHECK(rel_diff(lam.b22(0, 0), var_k2) <= 1e-12);
    CHECK(rel_diff(lam.b12(0, 0), m3 / n) <= 1e-12);
    CHECK(rel_diff(lam.b11(0, 0), m2 / n) <= 1e-12);
}

TEST_CASE("standard normal blocks at n = 10", "[covblocks]") {
    const MomentTable m = isserlis_table(Matrix::Identity(2, 2));
    const CovBlocks lam = lambda_blocks(m, 10);
    CHECK(max_rel_diff(lam.b11, Matrix::Identity(2, 2) / 10.0) == 0.0);
    CHECK(lam.b12.cwiseAbs().maxCoeff() == 0.0);
    // Var(S_00) = 2/(n-1), Var(S_01) = 1/(n-1), Cov(S_00, S_11) = 0.
    CHECK(lam.b22(0, 0) == Catch::Approx(2.0 / 9.0).epsilon(1e-14));
    CHECK(lam.b22(1, 1) == Catch::Approx(1.0 / 9.0).epsilon(1e-14));
    CHECK(std::abs(lam.b22(0, 2)) <= 1e-15);
}

TEST_CASE("blocks follow a relabeling of coordinates", "[covblocks]") {
    std::mt19937_64 rng(26);
    const MomentTable m = random_table(rng, 2, 6);
    const MomentTable swapped = MomentTable::from_function(2, 6, [&](std::span<const int> idx) {
        std::vector<int> flip;
        for (int i : idx) flip.push_back(1 - i);
        return m.at(flip);
    });
    const CovBlocks a = psi_blocks(m, 12), b = psi_blocks(swapped, 12);
    // Triples in lex order 000, 001, 011, 111 map to 111, 011, 001, 000.
    for (int r = 0; r < 4; ++r)
        for (int c = 0; c < 4; ++c) CHECK(rel_diff(a.b22(r, c), b.b22(3 - r, 3 - c)) <= 1e-13);
    CHECK(rel_diff(a.b11(0, 1), b.b11(1, 0)) <= 1e-15);
}

TEST_CASE("argument errors", "[covblocks]") {
    std::mt19937_64 rng(27);
    const MomentTable m6 = random_table(rng, 2, 6);
    const MomentTable m4 = random_table(rng, 2, 4);
    CHECK_THROWS_AS(lambda_blocks(m6, 4), SampleSizeError);
    CHECK_THROWS_AS(psi_blocks(m6, 5), SampleSizeError);
    CHECK_THROWS_AS(psi_blocks(m4, 20), InvalidArgument);
    CHECK_NOTHROW(lambda_blocks(m4, 5));
    try {
        psi_blocks(m6, 5);
    } catch (const SampleSizeError& e) {
        CHECK(e.required() == 6);
    }
}
