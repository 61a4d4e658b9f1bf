#pragma once

// Test statistics for multivariate normality: the canonical-correlation
// families Z2 (mean vs. sample covariance) and Z3 (mean vs. third-order
// k-statistics), Mardia's skewness and kurtosis, and the univariate
// correlation statistics Z2' and Z3'.

#include <Eigen/Dense>

#include <algorithm>
#include <array>
#include <cmath>
#include <numeric>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "ccmvn/cancor.hpp"
#include "ccmvn/covblocks.hpp"
#include "ccmvn/error.hpp"
#include "ccmvn/moments.hpp"

namespace ccmvn {

enum class Family { z2, z3, mardia_skew, mardia_kurt };

/// Direction in which a statistic signals non-normality.
enum class Tail { upper, lower, two_sided };

/// Identifies one of the twelve statistics. The tail is implied: W rejects
/// for small values, Mardia's kurtosis on both sides, everything else for
/// large values. mardia_kurt_upper() is the same kurtosis value tested in
/// the upper tail only; it is not one of the twelve.
class StatisticId {
public:
    static constexpr StatisticId z2(Functional f) { return {Family::z2, f}; }
    static constexpr StatisticId z3(Functional f) { return {Family::z3, f}; }
    static constexpr StatisticId mardia_skew() { return {Family::mardia_skew, std::nullopt}; }
    static constexpr StatisticId mardia_kurt() { return {Family::mardia_kurt, std::nullopt}; }
    static constexpr StatisticId mardia_kurt_upper() { return {Family::mardia_kurt, std::nullopt, true}; }

    constexpr Family family() const noexcept { return family_; }
    constexpr std::optional<Functional> functional() const noexcept { return functional_; }

    constexpr Tail tail() const noexcept {
        if (family_ == Family::mardia_kurt) return upper_only_ ? Tail::upper : Tail::two_sided;
        if (functional_ == Functional::w) return Tail::lower;
        return Tail::upper;
    }

    std::string name() const {
        switch (family_) {
            case Family::mardia_skew: return "b1p";
            case Family::mardia_kurt: return upper_only_ ? "b2p_upper" : "b2p";
            case Family::z2: return "z2_" + std::string(functional_name(*functional_));
            case Family::z3: return "z3_" + std::string(functional_name(*functional_));
        }
        return "?";
    }

    /// Smallest sample size at which the statistic is defined for dimension p.
    long min_n(long p) const {
        switch (family_) {
            case Family::z2: return second_family_min_n(p);
            case Family::z3: return third_family_min_n(p);
            default: return p + 1;
        }
    }

    friend constexpr bool operator==(const StatisticId&, const StatisticId&) = default;

private:
    constexpr StatisticId(Family fam, std::optional<Functional> f, bool upper_only = false)
        : family_(fam), functional_(f), upper_only_(upper_only) {}

    Family family_;
    std::optional<Functional> functional_;
    bool upper_only_;
};

/// All twelve statistics, in the column order of the power tables.
inline constexpr std::array<StatisticId, 12> kAllStatistics = {
    StatisticId::mardia_skew(),        StatisticId::mardia_kurt(),
    StatisticId::z2(Functional::hl),   StatisticId::z2(Functional::w),
    StatisticId::z2(Functional::pb),   StatisticId::z2(Functional::max),
    StatisticId::z2(Functional::min),  StatisticId::z3(Functional::hl),
    StatisticId::z3(Functional::w),    StatisticId::z3(Functional::pb),
    StatisticId::z3(Functional::max),  StatisticId::z3(Functional::min)};

inline StatisticId parse_statistic(std::string_view name) {
    for (const auto& s : kAllStatistics)
        if (s.name() == name) return s;
    if (name == StatisticId::mardia_kurt_upper().name()) return StatisticId::mardia_kurt_upper();
    throw InvalidArgument("unknown statistic '" + std::string(name) + "'");
}

namespace detail {

/// Cholesky factor of S; rank-deficient samples are rejected outright.
inline Eigen::LLT<Matrix> factor_covariance(const Sample& x) {
    Eigen::LLT<Matrix> llt(sample_cov(x));
    if (llt.info() != Eigen::Success || !(llt.rcond() >= kMinReciprocalCondition))
        throw DegenerateSample("sample covariance matrix is singular");
    return llt;
}

inline void require_min_n(const Sample& x, long need, const char* who) {
    if (x.n() < need)
        throw SampleSizeError(std::string(who) + ": n = " + std::to_string(x.n()) + " is below the minimum " +
                                  std::to_string(need) + " for p = " + std::to_string(x.p()),
                              need);
}

/// Rows sorted lexicographically. Every statistic is a symmetric function
/// of the rows, so evaluating on this order makes the floating-point result
/// independent of the order the observations arrived in.
inline Sample sorted_rows(const Sample& x) {
    std::vector<Eigen::Index> order(static_cast<std::size_t>(x.n()));
    std::iota(order.begin(), order.end(), Eigen::Index{0});
    const Matrix& d = x.data();
    std::sort(order.begin(), order.end(), [&](Eigen::Index a, Eigen::Index b) {
        for (Eigen::Index c = 0; c < d.cols(); ++c)
            if (d(a, c) != d(b, c)) return d(a, c) < d(b, c);
        return false;
    });
    Matrix out(d.rows(), d.cols());
    for (std::size_t r = 0; r < order.size(); ++r) out.row(static_cast<Eigen::Index>(r)) = d.row(order[r]);
    return Sample(std::move(out));
}

/// Rows y_a = L^-1 (x_a - mean) where S = L L'.
inline Matrix whitened(const Sample& x) {
    const auto llt = factor_covariance(x);
    const Matrix d = centered(x);
    return llt.matrixL().solve(d.transpose()).transpose();
}

/// Whitened copy of the row-sorted sample. All statistics are affine
/// invariant, and working in whitened coordinates keeps the moment blocks
/// well conditioned however the data were scaled.
inline Sample standardized(const Sample& x) { return Sample(whitened(sorted_rows(x))); }

}  // namespace detail

inline FunctionalSet z2_statistics_from_moments(const MomentTable& m, long n) {
    return functionals(cancor_sq(lambda_blocks(m, n)));
}

inline FunctionalSet z3_statistics_from_moments(const MomentTable& m, long n) {
    return functionals(cancor_sq(psi_blocks(m, n)));
}

inline FunctionalSet z2_statistics(const Sample& x) {
    detail::require_min_n(x, second_family_min_n(x.p()), "z2_statistics");
    return z2_statistics_from_moments(central_moments(detail::standardized(x), 4), static_cast<long>(x.n()));
}

inline FunctionalSet z3_statistics(const Sample& x) {
    detail::require_min_n(x, third_family_min_n(x.p()), "z3_statistics");
    return z3_statistics_from_moments(central_moments(detail::standardized(x), 6), static_cast<long>(x.n()));
}

namespace detail {

inline double b1p_from_whitened(const Matrix& y) {
    const Eigen::Index p = y.cols();
    const auto n = static_cast<double>(y.rows());
    double total = 0.0;
    for (Eigen::Index i = 0; i < p; ++i) {
        for (Eigen::Index j = i; j < p; ++j) {
            const Vector yij = y.col(i).cwiseProduct(y.col(j));
            for (Eigen::Index k = j; k < p; ++k) {
                const double m = yij.dot(y.col(k)) / n;
                // Number of ordered triples sharing this multiset.
                const double mult = (i == j && j == k) ? 1.0 : (i == j || j == k) ? 3.0 : 6.0;
                total += mult * m * m;
            }
        }
    }
    return total;
}

inline double b2p_from_whitened(const Matrix& y) { return y.rowwise().squaredNorm().array().square().mean(); }

}  // namespace detail

/// Mardia's skewness n^-2 sum_ab ((x_a - mean)' S^-1 (x_b - mean))^3, with
/// the (n-1)-divisor S. Evaluated as the sum of squared third moments of the
/// whitened data, which is the same double sum regrouped.
inline double mardia_b1p(const Sample& x) {
    return detail::b1p_from_whitened(detail::whitened(detail::sorted_rows(x)));
}

/// Mardia's kurtosis n^-1 sum_a ((x_a - mean)' S^-1 (x_a - mean))^2.
inline double mardia_b2p(const Sample& x) {
    return detail::b2p_from_whitened(detail::whitened(detail::sorted_rows(x)));
}

/// Population skewness sum W_ir W_js W_kt mu_ijk mu_rst with W = Sigma^-1,
/// the limit of mardia_b1p.
inline double mardia_beta1(const MomentTable& m) {
    const int p = m.p();
    Matrix sigma(p, p);
    for (int i = 0; i < p; ++i)
        for (int j = 0; j < p; ++j) sigma(i, j) = m({i, j});
    const Matrix w = sigma.llt().solve(Matrix::Identity(p, p));
    std::vector<double> mu(static_cast<std::size_t>(p * p * p)), t1(mu.size()), t2(mu.size()), t3(mu.size());
    auto at = [p](int i, int j, int k) { return static_cast<std::size_t>((i * p + j) * p + k); };
    for (int i = 0; i < p; ++i)
        for (int j = 0; j < p; ++j)
            for (int k = 0; k < p; ++k) mu[at(i, j, k)] = m({i, j, k});
    // Apply W along axis 0, 1, 2 in turn.
    const std::vector<double>* src = &mu;
    std::vector<double>* dst[3] = {&t1, &t2, &t3};
    for (int axis = 0; axis < 3; ++axis) {
        for (int i = 0; i < p; ++i)
            for (int j = 0; j < p; ++j)
                for (int k = 0; k < p; ++k) {
                    std::array<int, 3> idx{i, j, k};
                    const int out = idx[static_cast<std::size_t>(axis)];
                    double acc = 0.0;
                    for (int l = 0; l < p; ++l) {
                        idx[static_cast<std::size_t>(axis)] = l;
                        acc += w(out, l) * (*src)[at(idx[0], idx[1], idx[2])];
                    }
                    (*dst[axis])[at(i, j, k)] = acc;
                }
        src = dst[axis];
    }
    double total = 0.0;
    for (std::size_t q = 0; q < mu.size(); ++q) total += mu[q] * t3[q];
    return total;
}

/// Population kurtosis sum W_ij W_kl mu_ijkl, the limit of mardia_b2p.
inline double mardia_beta2(const MomentTable& m) {
    const int p = m.p();
    Matrix sigma(p, p);
    for (int i = 0; i < p; ++i)
        for (int j = 0; j < p; ++j) sigma(i, j) = m({i, j});
    const Matrix w = sigma.llt().solve(Matrix::Identity(p, p));
    double total = 0.0;
    for (int i = 0; i < p; ++i)
        for (int j = 0; j < p; ++j)
            for (int k = 0; k < p; ++k)
                for (int l = 0; l < p; ++l) total += w(i, j) * w(k, l) * m({i, j, k, l});
    return total;
}

namespace detail {

struct UnivariateShape {
    double n, gamma, kappa, m2, m6;
};

inline UnivariateShape univariate_shape(const Sample& x, long min_n, const char* who) {
    if (x.p() != 1) throw InvalidArgument(std::string(who) + ": sample must be univariate");
    require_min_n(x, min_n, who);
    const Sample xs = sorted_rows(x);
    const Vector d = xs.data().col(0).array() - xs.data().col(0).mean();
    const auto n = static_cast<double>(x.n());
    const double m2 = d.squaredNorm() / n;
    if (!(m2 > 0.0)) throw DegenerateSample(std::string(who) + ": zero sample variance");
    const double m3 = d.array().cube().sum() / n;
    const double m4 = d.array().square().square().sum() / n;
    const double m6 = d.array().cube().square().sum() / n;
    return {n, m3 / std::pow(m2, 1.5), m4 / (m2 * m2) - 3.0, m2, m6};
}

}  // namespace detail

/// Sample correlation between the mean and the variance,
/// gamma / sqrt(kappa + 3 - (n-3)/(n-1)), with divisor-n moments.
inline double z2_prime(const Sample& x) {
    const auto s = detail::univariate_shape(x, 4, "z2_prime");
    return s.gamma / std::sqrt(s.kappa + 3.0 - (s.n - 3.0) / (s.n - 1.0));
}

/// Sample correlation between the mean and the third k-statistic.
inline double z3_prime(const Sample& x) {
    const auto s = detail::univariate_shape(x, 6, "z3_prime");
    const double lambda = s.m6 / (s.m2 * s.m2 * s.m2) - 15.0 * s.kappa - 10.0 * s.gamma * s.gamma - 15.0;
    const double n = s.n;
    const double denom =
        lambda + 9.0 * n / (n - 1.0) * (s.kappa + s.gamma * s.gamma) + 6.0 * n * n / ((n - 1.0) * (n - 2.0));
    return s.kappa / std::sqrt(denom);
}

namespace detail {

/// PB at a unit eigenvalue is reported as its limit, +infinity.
inline double value_or_limit(const FunctionalSet& f, Functional which) {
    if (which == Functional::pb && !f.pb) return std::numeric_limits<double>::infinity();
    return f.value(which);
}

}  // namespace detail

/// Evaluates several statistics on one sample, sharing the moment table
/// between the two canonical-correlation families. Unlike FunctionalSet,
/// an undefined PB comes back as +infinity so simulation loops can rank it.
inline std::vector<double> evaluate(const Sample& x, std::span<const StatisticId> stats) {
    bool need_z2 = false, need_z3 = false;
    long need_n = 2;
    for (const auto& s : stats) {
        need_z2 |= s.family() == Family::z2;
        need_z3 |= s.family() == Family::z3;
        need_n = std::max(need_n, s.min_n(x.p()));
    }
    detail::require_min_n(x, need_n, "evaluate");
    const Sample y(detail::whitened(detail::sorted_rows(x)));  // also rejects degenerate samples

    std::optional<FunctionalSet> z2, z3;
    if (need_z2 || need_z3) {
        const MomentTable m = central_moments(y, need_z3 ? 6 : 4);
        const auto n = static_cast<long>(x.n());
        if (need_z2) z2 = z2_statistics_from_moments(m, n);
        if (need_z3) z3 = z3_statistics_from_moments(m, n);
    }

    std::vector<double> out;
    out.reserve(stats.size());
    for (const auto& s : stats) {
        switch (s.family()) {
            case Family::z2: out.push_back(detail::value_or_limit(*z2, *s.functional())); break;
            case Family::z3: out.push_back(detail::value_or_limit(*z3, *s.functional())); break;
            case Family::mardia_skew: out.push_back(detail::b1p_from_whitened(y.data())); break;
            case Family::mardia_kurt: out.push_back(detail::b2p_from_whitened(y.data())); break;
        }
    }
    return out;
}

}  // namespace ccmvn
