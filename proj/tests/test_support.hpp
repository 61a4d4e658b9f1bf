#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <span>
#include <vector>

#include "ccmvn/matalg.hpp"
#include "ccmvn/moments.hpp"

namespace ccmvn::testing {

inline Matrix random_matrix(std::mt19937_64& rng, Eigen::Index rows, Eigen::Index cols) {
    std::normal_distribution<double> z;
    Matrix m(rows, cols);
    for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = z(rng);
    return m;
}

/// Random matrix with singular values kept away from zero.
inline Matrix random_nonsingular(std::mt19937_64& rng, Eigen::Index p) {
    for (;;) {
        Matrix a = random_matrix(rng, p, p);
        Eigen::JacobiSVD<Matrix> svd(a);
        const auto& s = svd.singularValues();
        if (s(s.size() - 1) / s(0) > 0.05) return a;
    }
}

inline Matrix random_symmetric(std::mt19937_64& rng, Eigen::Index p) {
    Matrix a = random_matrix(rng, p, p);
    return (a + a.transpose()) * 0.5;
}

/// Skewed, dependent data: exponentials mixed by a random matrix.
inline Sample random_skewed_sample(std::mt19937_64& rng, Eigen::Index n, Eigen::Index p) {
    std::exponential_distribution<double> e;
    Matrix x(n, p);
    for (Eigen::Index i = 0; i < x.size(); ++i) x.data()[i] = e(rng);
    return Sample(x * random_nonsingular(rng, p));
}

inline Sample random_normal_sample(std::mt19937_64& rng, Eigen::Index n, Eigen::Index p) {
    return Sample(random_matrix(rng, n, p));
}

inline double rel_diff(double a, double b) {
    return std::abs(a - b) / std::max({1.0, std::abs(a), std::abs(b)});
}

inline double max_rel_diff(const Matrix& a, const Matrix& b) {
    const double scale = std::max({1.0, a.cwiseAbs().maxCoeff(), b.cwiseAbs().maxCoeff()});
    return (a - b).cwiseAbs().maxCoeff() / scale;
}

}  // namespace ccmvn::testing

namespace ccmvn::testing {

/// Gaussian central moments by Isserlis: zero for odd orders, otherwise the
/// sum over perfect matchings of products of covariances.
inline double isserlis(const Matrix& cov, std::vector<int> idx) {
    if (idx.empty()) return 1.0;
    if (idx.size() % 2 == 1) return 0.0;
    const int first = idx.front();
    double total = 0.0;
    for (std::size_t k = 1; k < idx.size(); ++k) {
        std::vector<int> rest;
        for (std::size_t l = 1; l < idx.size(); ++l)
            if (l != k) rest.push_back(idx[l]);
        total += cov(first, idx[k]) * isserlis(cov, rest);
    }
    return total;
}

inline MomentTable isserlis_table(const Matrix& cov, int max_order = 6) {
    return MomentTable::from_function(static_cast<int>(cov.rows()), max_order, [&](std::span<const int> idx) {
        return isserlis(cov, std::vector<int>(idx.begin(), idx.end()));
    });
}

/// Arbitrary symmetric values for every multi-index (not a realizable
/// distribution); for checking algebraic identities.
inline MomentTable random_table(std::mt19937_64& rng, int p, int max_order = 6) {
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    return MomentTable::from_function(p, max_order, [&](std::span<const int>) { return u(rng); });
}

}  // namespace ccmvn::testing
