#pragma once

// Partitioned covariance matrices of (mean, second-moment vector) and
// (mean, third-moment vector), expressed through central moments.
//
// Blocks are built from a MomentTable so that the same code serves sample
// plug-in estimates and exact population moments. Finite-n blocks carry the
// 1/n scaling; asymptotic blocks are the n -> infinity limit of n * block,
// which leaves the canonical correlations unchanged.

#include <algorithm>
#include <array>
#include <cstddef>
#include <initializer_list>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "ccmvn/error.hpp"
#include "ccmvn/matalg.hpp"
#include "ccmvn/moments.hpp"

namespace ccmvn {

enum class BlockFamily {
    second,  ///< (mean, u) with u the distinct entries of S
    third,   ///< (mean, v) with v the distinct third-order k-statistics S_ijk
};

struct CovBlocks {
    BlockFamily family{};
    Matrix b11;  ///< p x p
    Matrix b12;  ///< p x q
    Matrix b22;  ///< q x q
    std::optional<long> n;  ///< empty for asymptotic (n-scaled limit) blocks
    int p = 0;
    int q = 0;
};

/// Smallest n at which the second-moment blocks are defined.
constexpr long second_family_min_n(long p) { return 2 * p + p * (p - 1) / 2; }

/// Smallest n at which the third-moment blocks are defined.
constexpr long third_family_min_n(long p) {
    const long base = 2 * p + p * (p - 1) + p * (p - 1) * (p - 2) / 6;
    return base < 3 ? 3 : base;
}

// -- permutation schemes ---------------------------------------------------

/// Slots 0..5 stand for the six indices (i, j, k, r, s, t) of an entry of the
/// third-family covariance; the row index is (i, j, k) and the column (r, s, t).
enum class SchemeLabel {
    sum9_pair,          ///< cross pairs {a, b}, a in ijk, b in rst; other four form a quadruple
    sum9_triple,        ///< splits into two triples, each mixing both sides
    sum3_pairpair,      ///< pairings of four slots (0..3) into two pairs
    sum6_matching,      ///< matchings pairing each of ijk with one of rst
    sum15_pair,         ///< any pair of the six slots; other four form a quadruple
    sum10_triple,       ///< all splits of the six slots into two triples
    sum15_triplematch,  ///< all perfect matchings of the six slots
};

/// One summand: a product of moments, one per group of slots.
struct SchemeTerm {
    std::vector<std::vector<int>> groups;
    friend bool operator==(const SchemeTerm&, const SchemeTerm&) = default;
};

struct PermutationScheme {
    SchemeLabel label{};
    std::vector<SchemeTerm> terms;
};

namespace detail {

inline std::vector<int> complement(std::initializer_list<int> used, int total) {
    std::vector<int> rest;
    for (int x = 0; x < total; ++x)
        if (std::find(used.begin(), used.end(), x) == used.end()) rest.push_back(x);
    return rest;
}

inline PermutationScheme build_scheme(SchemeLabel label) {
    PermutationScheme s{label, {}};
    switch (label) {
        case SchemeLabel::sum9_pair:
            for (int a = 0; a < 3; ++a)
                for (int b = 3; b < 6; ++b) s.terms.push_back({{{a, b}, complement({a, b}, 6)}});
            break;
        case SchemeLabel::sum9_triple:
            // Two slots from ijk plus one from rst; the complement holds the rest.
            for (int a = 0; a < 3; ++a)
                for (int b = a + 1; b < 3; ++b)
                    for (int c = 3; c < 6; ++c) s.terms.push_back({{{a, b, c}, complement({a, b, c}, 6)}});
            break;
        case SchemeLabel::sum3_pairpair:
            s.terms = {{{{0, 1}, {2, 3}}}, {{{0, 2}, {1, 3}}}, {{{0, 3}, {1, 2}}}};
            break;
        case SchemeLabel::sum6_matching: {
            std::array<int, 3> rst{3, 4, 5};
            do {
                s.terms.push_back({{{0, rst[0]}, {1, rst[1]}, {2, rst[2]}}});
            } while (std::next_permutation(rst.begin(), rst.end()));
            break;
        }
        case SchemeLabel::sum15_pair:
            for (int a = 0; a < 6; ++a)
                for (int b = a + 1; b < 6; ++b) s.terms.push_back({{{a, b}, complement({a, b}, 6)}});
            break;
        case SchemeLabel::sum10_triple:
            for (int a = 1; a < 6; ++a)
                for (int b = a + 1; b < 6; ++b) s.terms.push_back({{{0, a, b}, complement({0, a, b}, 6)}});
            break;
        case SchemeLabel::sum15_triplematch:
            for (int a = 1; a < 6; ++a) {
                const auto rest = complement({0, a}, 6);
                for (int b = 1; b < 4; ++b) {
                    std::vector<int> last;
                    for (int x = 1; x < 4; ++x)
                        if (x != b) last.push_back(rest[static_cast<std::size_t>(x)]);
                    s.terms.push_back({{{0, a}, {rest[0], rest[static_cast<std::size_t>(b)]}, last}});
                }
            }
            break;
    }
    return s;
}

}  // namespace detail

/// Explicit term list for one of the permutation sums. Built once.
inline const PermutationScheme& permutation_scheme(SchemeLabel label) {
    static const std::array<PermutationScheme, 7> schemes = {
        detail::build_scheme(SchemeLabel::sum9_pair),    detail::build_scheme(SchemeLabel::sum9_triple),
        detail::build_scheme(SchemeLabel::sum3_pairpair), detail::build_scheme(SchemeLabel::sum6_matching),
        detail::build_scheme(SchemeLabel::sum15_pair),    detail::build_scheme(SchemeLabel::sum10_triple),
        detail::build_scheme(SchemeLabel::sum15_triplematch)};
    return schemes[static_cast<std::size_t>(label)];
}

// -- dense moment lookup ---------------------------------------------------

namespace detail {

/// Unsorted-index view of a MomentTable: one dense p^s array per order, so
/// the inner loops of the block builders avoid sorting.
class DenseMoments {
public:
    explicit DenseMoments(const MomentTable& m) : p_(m.p()), max_order_(m.max_order()) {
        std::size_t stride = 1;
        for (int s = 1; s <= max_order_; ++s) {
            stride *= static_cast<std::size_t>(p_);
            if (s < 2) continue;
            auto& dense = values_[static_cast<std::size_t>(s)];
            dense.resize(stride);
            std::array<int, kMaxMomentOrder> idx{};
            for (std::size_t flat = 0; flat < stride; ++flat) {
                std::size_t rem = flat;
                for (int l = 0; l < s; ++l) {
                    idx[static_cast<std::size_t>(l)] = static_cast<int>(rem % static_cast<std::size_t>(p_));
                    rem /= static_cast<std::size_t>(p_);
                }
                dense[flat] = m.at(std::span<const int>(idx.data(), static_cast<std::size_t>(s)));
            }
        }
    }

    int max_order() const noexcept { return max_order_; }

    double operator()(std::initializer_list<int> idx) const { return get(idx.begin(), idx.size()); }

    double get(const int* idx, std::size_t s) const {
        std::size_t flat = 0;
        for (std::size_t l = s; l-- > 0;) flat = flat * static_cast<std::size_t>(p_) + static_cast<std::size_t>(idx[l]);
        return values_[s][flat];
    }

    /// Product over groups of moments indexed by idx6[slot].
    double term(const SchemeTerm& t, const int* idx6) const {
        double prod = 1.0;
        std::array<int, kMaxMomentOrder> buf{};
        for (const auto& g : t.groups) {
            for (std::size_t l = 0; l < g.size(); ++l) buf[l] = idx6[g[l]];
            prod *= get(buf.data(), g.size());
        }
        return prod;
    }

private:
    int p_;
    int max_order_;
    std::array<std::vector<double>, kMaxMomentOrder + 1> values_{};
};

/// mu_ab * (mu_cdef - sum3 mu_cd mu_ef) for a pair term {ab | cdef}.
inline double pair_times_fourth_cumulant(const DenseMoments& m, const SchemeTerm& t, const int* idx6) {
    const auto& pair = t.groups[0];
    const auto& quad = t.groups[1];
    const std::array<int, 4> four{idx6[quad[0]], idx6[quad[1]], idx6[quad[2]], idx6[quad[3]]};
    double inner = m.get(four.data(), 4);
    for (const auto& pp : permutation_scheme(SchemeLabel::sum3_pairpair).terms) inner -= m.term(pp, four.data());
    const std::array<int, 2> ab{idx6[pair[0]], idx6[pair[1]]};
    return m.get(ab.data(), 2) * inner;
}

inline double sixth_cumulant(const DenseMoments& m, const int* idx6) {
    double value = m.get(idx6, 6);
    for (const auto& t : permutation_scheme(SchemeLabel::sum15_pair).terms) value -= pair_times_fourth_cumulant(m, t, idx6);
    for (const auto& t : permutation_scheme(SchemeLabel::sum10_triple).terms) value -= m.term(t, idx6);
    for (const auto& t : permutation_scheme(SchemeLabel::sum15_triplematch).terms) value -= m.term(t, idx6);
    return value;
}

inline void require_order(const MomentTable& m, int order, const char* who) {
    if (m.max_order() < order)
        throw InvalidArgument(std::string(who) + ": moment table must reach order " + std::to_string(order));
}

}  // namespace detail

/// lambda_{ijkrst}: the sixth-order term of Cov(S_ijk, S_rst). Vanishes for
/// Gaussian moments.
inline double lambda6(const MomentTable& m, std::span<const int, 6> idx) {
    detail::require_order(m, 6, "lambda6");
    return detail::sixth_cumulant(detail::DenseMoments(m), idx.data());
}

namespace detail {

inline CovBlocks second_blocks(const MomentTable& m, std::optional<long> n) {
    require_order(m, 4, "lambda_blocks");
    const int p = m.p();
    const auto pairs = multi_indices(p, 2);
    const int q = static_cast<int>(pairs.size());
    const DenseMoments mu(m);

    // Finite n: every entry carries 1/n, and the pair-product term of the
    // 22-block 1/(n(n-1)). The asymptotic blocks are n times the limit.
    const double scale = n ? 1.0 / static_cast<double>(*n) : 1.0;
    const double pair_coef = n ? 1.0 / (static_cast<double>(*n) * static_cast<double>(*n - 1)) : 0.0;

    CovBlocks out{BlockFamily::second, Matrix(p, p), Matrix(p, q), Matrix(q, q), n, p, q};
    for (int i = 0; i < p; ++i)
        for (int j = 0; j < p; ++j) out.b11(i, j) = scale * mu({i, j});
    for (int i = 0; i < p; ++i)
        for (int c = 0; c < q; ++c) out.b12(i, c) = scale * mu({i, pairs[c][0], pairs[c][1]});
    for (int a = 0; a < q; ++a) {
        const int i = pairs[a][0], j = pairs[a][1];
        for (int b = 0; b < q; ++b) {
            const int k = pairs[b][0], l = pairs[b][1];
            out.b22(a, b) = scale * (mu({i, j, k, l}) - mu({i, j}) * mu({k, l})) +
                            pair_coef * (mu({i, k}) * mu({j, l}) + mu({i, l}) * mu({j, k}));
        }
    }
    return out;
}

inline CovBlocks third_blocks(const MomentTable& m, std::optional<long> n) {
    require_order(m, 6, "psi_blocks");
    const int p = m.p();
    const auto triples = multi_indices(p, 3);
    const int q = static_cast<int>(triples.size());
    const DenseMoments mu(m);

    double c_cumulant = 1.0, c_mixed = 1.0, c_matching = 1.0, scale = 1.0;
    if (n) {
        const auto nn = static_cast<double>(*n);
        scale = 1.0 / nn;
        c_cumulant = 1.0 / nn;
        c_mixed = 1.0 / (nn - 1.0);
        c_matching = nn / ((nn - 1.0) * (nn - 2.0));
    }

    CovBlocks out{BlockFamily::third, Matrix(p, p), Matrix(p, q), Matrix(q, q), n, p, q};
    for (int i = 0; i < p; ++i)
        for (int j = 0; j < p; ++j) out.b11(i, j) = scale * mu({i, j});
    for (int i = 0; i < p; ++i) {
        for (int c = 0; c < q; ++c) {
            const int r = triples[c][0], s = triples[c][1], t = triples[c][2];
            out.b12(i, c) = scale * (mu({i, r, s, t}) - mu({i, r}) * mu({s, t}) - mu({i, s}) * mu({r, t}) -
                                     mu({i, t}) * mu({r, s}));
        }
    }

    const auto& pair9 = permutation_scheme(SchemeLabel::sum9_pair).terms;
    const auto& triple9 = permutation_scheme(SchemeLabel::sum9_triple).terms;
    const auto& match6 = permutation_scheme(SchemeLabel::sum6_matching).terms;
    for (int a = 0; a < q; ++a) {
        for (int b = 0; b < q; ++b) {
            const std::array<int, 6> idx{triples[a][0], triples[a][1], triples[a][2],
                                         triples[b][0], triples[b][1], triples[b][2]};
            double mixed = 0.0;
            for (const auto& t : pair9) mixed += pair_times_fourth_cumulant(mu, t, idx.data());
            for (const auto& t : triple9) mixed += mu.term(t, idx.data());
            double matching = 0.0;
            for (const auto& t : match6) matching += mu.term(t, idx.data());
            out.b22(a, b) = c_cumulant * sixth_cumulant(mu, idx.data()) + c_mixed * mixed + c_matching * matching;
        }
    }
    return out;
}

}  // namespace detail

/// Cov((mean, u)) blocks for sample size n from moments up to order 4.
inline CovBlocks lambda_blocks(const MomentTable& m, long n) {
    const long need = second_family_min_n(m.p());
    if (n < need || n < 2)
        throw SampleSizeError("lambda_blocks: n = " + std::to_string(n) + " is below the minimum " +
                                  std::to_string(need) + " for p = " + std::to_string(m.p()),
                              need);
    return detail::second_blocks(m, n);
}

/// n -> infinity limit of n * Cov((mean, u)).
inline CovBlocks lambda_blocks_limit(const MomentTable& m) { return detail::second_blocks(m, std::nullopt); }

/// Cov((mean, v)) blocks for sample size n from moments up to order 6.
inline CovBlocks psi_blocks(const MomentTable& m, long n) {
    const long need = third_family_min_n(m.p());
    if (n < need)
        throw SampleSizeError("psi_blocks: n = " + std::to_string(n) + " is below the minimum " +
                                  std::to_string(need) + " for p = " + std::to_string(m.p()),
                              need);
    return detail::third_blocks(m, n);
}

/// n -> infinity limit of n * Cov((mean, v)).
inline CovBlocks psi_blocks_limit(const MomentTable& m) { return detail::third_blocks(m, std::nullopt); }

}  // namespace ccmvn
