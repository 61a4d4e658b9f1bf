#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <array>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "ccmvn/covblocks.hpp"
#include "ccmvn/error.hpp"

namespace ccmvn {

/// Squared canonical correlations, sorted descending and clamped to [0, 1].
struct CanCorSq {
    std::vector<double> values;
    int clamped_count = 0;  ///< raw eigenvalues nudged into [0, 1]
};

/// Eigenvalues within this distance outside [0, 1] are clamped; beyond it
/// the blocks cannot be a covariance partition and construction is broken.
inline constexpr double kEigenClampTolerance = 1e-8;

/// Blocks with reciprocal condition number below this are singular.
inline constexpr double kMinReciprocalCondition = 1e-12;

namespace detail {

inline Eigen::LLT<Matrix> factor_block(const Matrix& block, const char* name) {
    const Matrix sym = (block + block.transpose()) * 0.5;
    Eigen::LLT<Matrix> llt(sym);
    if (llt.info() != Eigen::Success || !(llt.rcond() >= kMinReciprocalCondition))
        throw SingularBlock(std::string("cancor_sq: block ") + name + " is singular or not positive definite");
    return llt;
}

}  // namespace detail

/// Eigenvalues of b11^-1 b12 b22^-1 b21.
///
/// Both diagonal blocks are Cholesky-factored (b11 = L L', b22 = M M') and
/// the eigenproblem is solved for the symmetric matrix C C' with
/// C = L^-1 b12 M^-T, which is similar to the product above.
inline CanCorSq cancor_sq(const CovBlocks& blocks) {
    const auto l11 = detail::factor_block(blocks.b11, "11");
    const auto l22 = detail::factor_block(blocks.b22, "22");

    // C' = M^-1 (L^-1 b12)'
    const Matrix left = l11.matrixL().solve(blocks.b12);
    const Matrix ct = l22.matrixL().solve(left.transpose());
    Matrix core = ct.transpose() * ct;
    core = (core + core.transpose()) * 0.5;

    Eigen::SelfAdjointEigenSolver<Matrix> eig(core, Eigen::EigenvaluesOnly);
    if (eig.info() != Eigen::Success) throw SingularBlock("cancor_sq: eigen decomposition failed");

    CanCorSq out;
    out.values.assign(eig.eigenvalues().data(), eig.eigenvalues().data() + eig.eigenvalues().size());
    std::sort(out.values.begin(), out.values.end(), std::greater<>());
    for (double& v : out.values) {
        if (v < -kEigenClampTolerance || v > 1.0 + kEigenClampTolerance)
            throw EigenvalueRange("cancor_sq: squared canonical correlation " + std::to_string(v) +
                                  " outside [0, 1]");
        if (v < 0.0) {
            v = 0.0;
            ++out.clamped_count;
        } else if (v > 1.0) {
            v = 1.0;
            ++out.clamped_count;
        }
    }
    return out;
}

/// MANOVA-style summaries of squared canonical correlations.
enum class Functional { hl, w, pb, max, min };

inline constexpr std::array<Functional, 5> kFunctionals = {Functional::hl, Functional::w, Functional::pb,
                                                           Functional::max, Functional::min};

inline std::string_view functional_name(Functional f) {
    switch (f) {
        case Functional::hl: return "hl";
        case Functional::w: return "w";
        case Functional::pb: return "pb";
        case Functional::max: return "max";
        case Functional::min: return "min";
    }
    return "?";
}

/// The five functionals. PB is left empty when an eigenvalue is within
/// 1e-12 of one; value() then throws for PB while the others stay usable.
struct FunctionalSet {
    double hl = 0.0;  ///< sum of eigenvalues (Hotelling-Lawley)
    double w = 1.0;   ///< prod (1 - eigenvalue) (Wilks)
    std::optional<double> pb = 0.0;  ///< sum e / (1 - e) (Pillai-Bartlett)
    double max = 0.0;
    double min = 0.0;

    double value(Functional f) const {
        switch (f) {
            case Functional::hl: return hl;
            case Functional::w: return w;
            case Functional::pb:
                if (!pb) throw EigenvalueRange("PB functional undefined: squared canonical correlation at 1");
                return *pb;
            case Functional::max: return max;
            case Functional::min: return min;
        }
        throw InvalidArgument("unknown functional");
    }
};

inline FunctionalSet functionals(const CanCorSq& c) {
    if (c.values.empty()) throw InvalidArgument("functionals: no eigenvalues");
    FunctionalSet f;
    f.hl = 0.0;
    f.w = 1.0;
    double pb = 0.0;
    bool pb_defined = true;
    for (double v : c.values) {
        f.hl += v;
        f.w *= 1.0 - v;
        if (v >= 1.0 - 1e-12)
            pb_defined = false;
        else
            pb += v / (1.0 - v);
    }
    f.pb = pb_defined ? std::optional<double>(pb) : std::nullopt;
    f.max = *std::max_element(c.values.begin(), c.values.end());
    f.min = *std::min_element(c.values.begin(), c.values.end());
    return f;
}

}  // namespace ccmvn
