#pragma once

// Test-only reference for the third-family covariance. Every permutation
// sum is regenerated from a single template term by applying all 6!
// permutations of the slots (i, j, k, r, s, t) and removing duplicates, so
// it shares nothing with the hand-enumerated schemes in covblocks.hpp.

#include <algorithm>
#include <array>
#include <numeric>
#include <set>
#include <span>
#include <vector>

#include "ccmvn/moments.hpp"

namespace ccmvn::testing {

/// A term is a list of slot groups. `ordered` keeps the first group
/// distinguished (pair times quadruple); otherwise groups are a set.
using Groups = std::vector<std::vector<int>>;

inline Groups canonical(Groups g, bool ordered) {
    for (auto& grp : g) std::sort(grp.begin(), grp.end());
    if (ordered)
        std::sort(g.begin() + 1, g.end());
    else
        std::sort(g.begin(), g.end());
    return g;
}

inline bool preserves_sides(const std::array<int, 6>& perm) {
    for (int s = 0; s < 3; ++s)
        if (perm[static_cast<std::size_t>(s)] >= 3) return false;
    return true;
}

/// Distinct images of `tmpl` under all permutations of `slots` slots;
/// with side_preserving, only those mapping {0,1,2} onto itself.
inline std::set<Groups> orbit(const Groups& tmpl, bool ordered, bool side_preserving, int slots = 6) {
    std::vector<int> perm(static_cast<std::size_t>(slots));
    std::iota(perm.begin(), perm.end(), 0);
    std::set<Groups> out;
    do {
        if (side_preserving) {
            std::array<int, 6> p6{};
            std::copy(perm.begin(), perm.end(), p6.begin());
            if (!preserves_sides(p6)) continue;
        }
        Groups img = tmpl;
        for (auto& grp : img)
            for (int& s : grp) s = perm[static_cast<std::size_t>(s)];
        out.insert(canonical(img, ordered));
    } while (std::next_permutation(perm.begin(), perm.end()));
    return out;
}

struct OracleSchemes {
    std::set<Groups> pair9, triple9_all_but_identity, triple9_mixed, match6;
    std::set<Groups> pair15, triple10, match15, pairpair3;
};

inline const OracleSchemes& oracle_schemes() {
    static const OracleSchemes s = [] {
        OracleSchemes o;
        o.pair9 = orbit({{0, 3}, {1, 2, 4, 5}}, true, true);
        o.triple9_all_but_identity = orbit({{0, 1, 2}, {3, 4, 5}}, false, false);
        o.triple9_all_but_identity.erase(Groups{{0, 1, 2}, {3, 4, 5}});
        o.triple9_mixed = orbit({{0, 1, 3}, {2, 4, 5}}, false, true);
        o.match6 = orbit({{0, 3}, {1, 4}, {2, 5}}, false, true);
        o.pair15 = orbit({{0, 1}, {2, 3, 4, 5}}, true, false);
        o.triple10 = orbit({{0, 1, 2}, {3, 4, 5}}, false, false);
        o.match15 = orbit({{0, 1}, {2, 3}, {4, 5}}, false, false);
        o.pairpair3 = orbit({{0, 1}, {2, 3}}, false, false, 4);
        return o;
    }();
    return s;
}

inline double group_moment(const MomentTable& m, const std::vector<int>& grp, std::span<const int> idx) {
    std::vector<int> sel;
    for (int s : grp) sel.push_back(idx[static_cast<std::size_t>(s)]);
    return m.at(sel);
}

inline double product(const MomentTable& m, const Groups& g, std::span<const int> idx) {
    double prod = 1.0;
    for (const auto& grp : g) prod *= group_moment(m, grp, idx);
    return prod;
}

/// mu_pair * (mu_quad - sum3 mu mu) for an ordered {pair, quadruple} term.
inline double pair_fourth(const MomentTable& m, const Groups& g, std::span<const int> idx) {
    std::vector<int> four;
    for (int s : g[1]) four.push_back(idx[static_cast<std::size_t>(s)]);
    double inner = m.at(four);
    for (const auto& pp : oracle_schemes().pairpair3) inner -= product(m, pp, four);
    return group_moment(m, g[0], idx) * inner;
}

inline double oracle_lambda6(const MomentTable& m, std::span<const int> idx) {
    const auto& o = oracle_schemes();
    double v = m.at(idx);
    for (const auto& g : o.pair15) v -= pair_fourth(m, g, idx);
    for (const auto& g : o.triple10) v -= product(m, g, idx);
    for (const auto& g : o.match15) v -= product(m, g, idx);
    return v;
}

/// One entry of Cov(S_ijk, S_rst); n == 0 selects the n-scaled limit.
inline double oracle_psi22(const MomentTable& m, std::span<const int> idx, long n) {
    const auto& o = oracle_schemes();
    double mixed = 0.0;
    for (const auto& g : o.pair9) mixed += pair_fourth(m, g, idx);
    for (const auto& g : o.triple9_all_but_identity) mixed += product(m, g, idx);
    double matching = 0.0;
    for (const auto& g : o.match6) matching += product(m, g, idx);
    const double lam = oracle_lambda6(m, idx);
    if (n == 0) return lam + mixed + matching;
    const auto nn = static_cast<double>(n);
    return lam / nn + mixed / (nn - 1.0) + nn / ((nn - 1.0) * (nn - 2.0)) * matching;
}

/// Limit of n Cov(m_ijk, m_rst) from the delta method applied to the
/// influence function x_i x_j x_k - mu_ijk - x_i mu_jk - x_j mu_ik - x_k mu_ij.
inline double delta_method_psi22(const MomentTable& m, std::span<const int> idx) {
    const std::array<int, 3> a{idx[0], idx[1], idx[2]};
    const std::array<int, 3> b{idx[3], idx[4], idx[5]};
    auto drop = [](const std::array<int, 3>& t, int k) {
        std::vector<int> out;
        for (int l = 0; l < 3; ++l)
            if (l != k) out.push_back(t[static_cast<std::size_t>(l)]);
        return out;
    };
    double v = m.at(idx) - m.at(a) * m.at(b);
    for (int l = 0; l < 3; ++l) {
        std::vector<int> with_b(a.begin(), a.end());
        with_b.push_back(b[static_cast<std::size_t>(l)]);
        v -= m.at(with_b) * m.at(drop(b, l));
        std::vector<int> with_a(b.begin(), b.end());
        with_a.push_back(a[static_cast<std::size_t>(l)]);
        v -= m.at(with_a) * m.at(drop(a, l));
    }
    for (int k = 0; k < 3; ++k)
        for (int l = 0; l < 3; ++l)
            v += m({a[static_cast<std::size_t>(k)], b[static_cast<std::size_t>(l)]}) * m.at(drop(a, k)) *
                 m.at(drop(b, l));
    return v;
}

}  // namespace ccmvn::testing
