#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <functional>
#include <initializer_list>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "ccmvn/error.hpp"
#include "ccmvn/matalg.hpp"

namespace ccmvn {

/// Highest moment order any statistic in this library needs.
inline constexpr int kMaxMomentOrder = 6;

/// n observations of a p-variate variable; rows are observations.
class Sample {
public:
    Sample() = default;

    explicit Sample(Matrix data) : data_(std::move(data)) {
        if (data_.rows() < 2) throw InvalidArgument("Sample: need at least 2 observations");
        if (data_.cols() < 1) throw InvalidArgument("Sample: need at least 1 variable");
        if (!data_.allFinite()) throw InvalidArgument("Sample: non-finite entry");
    }

    Eigen::Index n() const noexcept { return data_.rows(); }
    Eigen::Index p() const noexcept { return data_.cols(); }
    const Matrix& data() const noexcept { return data_; }

private:
    Matrix data_;
};

namespace detail {

inline constexpr std::size_t binomial(std::size_t n, std::size_t k) {
    if (k > n) return 0;
    std::size_t r = 1;
    for (std::size_t i = 1; i <= k; ++i) r = r * (n - k + i) / i;
    return r;
}

/// Colex rank of a nondecreasing multi-index among multisets of its order.
inline std::size_t multiset_rank(std::span<const int> sorted) {
    std::size_t rank = 0;
    for (std::size_t l = 0; l < sorted.size(); ++l)
        rank += binomial(static_cast<std::size_t>(sorted[l]) + l, l + 1);
    return rank;
}

template <class Fn>
void for_each_multi_index_rec(int p, int order, int start, std::array<int, kMaxMomentOrder>& idx,
                              int depth, Fn& fn) {
    if (depth == order) {
        fn(std::span<const int>(idx.data(), static_cast<std::size_t>(order)));
        return;
    }
    for (int i = start; i < p; ++i) {
        idx[static_cast<std::size_t>(depth)] = i;
        for_each_multi_index_rec(p, order, i, idx, depth + 1, fn);
    }
}

}  // namespace detail

/// Number of nondecreasing multi-indices of the given order over p variables.
inline std::size_t multi_index_count(int p, int order) {
    return detail::binomial(static_cast<std::size_t>(p + order - 1), static_cast<std::size_t>(order));
}

/// Visits every nondecreasing multi-index of `order` over 0..p-1 in
/// lexicographic order: (0,0), (0,1), ..., (p-1,p-1) for order 2.
template <class Fn>
void for_each_multi_index(int p, int order, Fn&& fn) {
    if (order < 1 || order > kMaxMomentOrder) throw InvalidArgument("multi-index order out of range");
    std::array<int, kMaxMomentOrder> idx{};
    detail::for_each_multi_index_rec(p, order, 0, idx, 0, fn);
}

/// Lexicographically ordered list of all nondecreasing multi-indices of an order.
inline std::vector<std::vector<int>> multi_indices(int p, int order) {
    std::vector<std::vector<int>> out;
    out.reserve(multi_index_count(p, order));
    for_each_multi_index(p, order, [&](std::span<const int> idx) { out.emplace_back(idx.begin(), idx.end()); });
    return out;
}

/// Central moments m_{i1...is} for 2 <= s <= max_order, fully symmetric.
///
/// Only one value per multiset of indices is stored; lookups sort the
/// query first, so any permutation of a multi-index returns the same value.
/// The same container holds sample moments and exact population moments.
class MomentTable {
public:
    MomentTable() = default;

    MomentTable(int p, int max_order) : p_(p), max_order_(max_order) {
        if (p < 1) throw InvalidArgument("MomentTable: p must be positive");
        if (max_order < 2 || max_order > kMaxMomentOrder)
            throw InvalidArgument("MomentTable: max_order must be in 2..6");
        for (int s = 2; s <= max_order; ++s) values_[static_cast<std::size_t>(s)].assign(multi_index_count(p, s), 0.0);
    }

    /// Fills every entry from fn(sorted multi-index).
    template <class Fn>
    static MomentTable from_function(int p, int max_order, Fn&& fn) {
        MomentTable t(p, max_order);
        for (int s = 2; s <= max_order; ++s)
            for_each_multi_index(p, s, [&](std::span<const int> idx) { t.slot(idx) = fn(idx); });
        return t;
    }

    int p() const noexcept { return p_; }
    int max_order() const noexcept { return max_order_; }

    double at(std::span<const int> idx) const { return values_[check(idx)][rank(idx)]; }

    double operator()(std::initializer_list<int> idx) const {
        return at(std::span<const int>(idx.begin(), idx.size()));
    }

    void set(std::span<const int> idx, double value) { slot(idx) = value; }

    /// Stored values of one order, in colex multiset order.
    std::span<const double> order_values(int order) const {
        if (order < 2 || order > max_order_) throw InvalidArgument("MomentTable: order out of range");
        return values_[static_cast<std::size_t>(order)];
    }

    friend bool operator==(const MomentTable&, const MomentTable&) = default;

private:
    std::size_t check(std::span<const int> idx) const {
        const auto s = idx.size();
        if (s < 2 || s > static_cast<std::size_t>(max_order_))
            throw InvalidArgument("MomentTable: order " + std::to_string(s) + " not stored");
        for (int i : idx)
            if (i < 0 || i >= p_) throw InvalidArgument("MomentTable: index out of range");
        return s;
    }

    static std::size_t rank(std::span<const int> idx) {
        std::array<int, kMaxMomentOrder> sorted{};
        std::copy(idx.begin(), idx.end(), sorted.begin());
        std::sort(sorted.begin(), sorted.begin() + static_cast<std::ptrdiff_t>(idx.size()));
        return detail::multiset_rank(std::span<const int>(sorted.data(), idx.size()));
    }

    double& slot(std::span<const int> idx) { return values_[check(idx)][rank(idx)]; }

    int p_ = 0;
    int max_order_ = 0;
    std::array<std::vector<double>, kMaxMomentOrder + 1> values_{};
};

inline Vector sample_mean(const Sample& x) { return x.data().colwise().mean().transpose(); }

namespace detail {

inline Matrix centered(const Sample& x) {
    const Eigen::RowVectorXd mean = x.data().colwise().mean();
    return x.data().rowwise() - mean;
}

}  // namespace detail

/// Sample covariance with divisor n - 1.
inline Matrix sample_cov(const Sample& x) {
    if (x.n() < 2) throw InvalidArgument("sample_cov: need n >= 2");
    const Matrix d = detail::centered(x);
    Matrix s = (d.transpose() * d) / static_cast<double>(x.n() - 1);
    return (s + s.transpose()) * 0.5;
}

/// m_{i1..is} = n^-1 sum_k prod_l (x_{k,il} - mean_il), two-pass.
inline MomentTable central_moments(const Sample& x, int max_order) {
    const int p = static_cast<int>(x.p());
    MomentTable table(p, max_order);
    const Matrix d = detail::centered(x);
    const Eigen::Index n = x.n();

    // Depth-first over nondecreasing index tuples; each level multiplies the
    // parent's product column by one more centred column.
    std::vector<Vector> prefix(static_cast<std::size_t>(max_order) + 1, Vector(n));
    prefix[0].setOnes();
    std::array<int, kMaxMomentOrder> idx{};
    std::function<void(int, int)> visit = [&](int depth, int start) {
        for (int i = start; i < p; ++i) {
            idx[static_cast<std::size_t>(depth)] = i;
            auto& cur = prefix[static_cast<std::size_t>(depth) + 1];
            cur = prefix[static_cast<std::size_t>(depth)].cwiseProduct(d.col(i));
            if (depth + 1 >= 2)
                table.set(std::span<const int>(idx.data(), static_cast<std::size_t>(depth) + 1),
                          cur.sum() / static_cast<double>(n));
            if (depth + 1 < max_order) visit(depth + 1, i);
        }
    };
    visit(0, 0);
    return table;
}

/// S_{ijk} = n / ((n-1)(n-2)) sum_r prod (x - mean), for i <= j <= k in
/// lexicographic order: S_000, S_001, ..., S_{p-1,p-1,p-1}.
inline Vector sample_third(const Sample& x) {
    if (x.n() < 3) throw InvalidArgument("sample_third: need n >= 3");
    const auto n = static_cast<double>(x.n());
    const int p = static_cast<int>(x.p());
    const Matrix d = detail::centered(x);
    Vector out(static_cast<Eigen::Index>(multi_index_count(p, 3)));
    Eigen::Index k = 0;
    const double factor = n / ((n - 1.0) * (n - 2.0));
    for_each_multi_index(p, 3, [&](std::span<const int> idx) {
        out(k++) = factor * (d.col(idx[0]).cwiseProduct(d.col(idx[1])).cwiseProduct(d.col(idx[2]))).sum();
    });
    return out;
}

}  // namespace ccmvn
