#pragma once

// Kronecker products, vec/vech and the commutation, duplication and
// elimination matrices. Dense only: the dimensions involved here are p^2
// or p^3 for p of at most ten or so.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <utility>

#include "ccmvn/error.hpp"

namespace ccmvn {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

namespace matalg {

/// Number of distinct elements of a symmetric p x p matrix.
constexpr Eigen::Index half_size(Eigen::Index p) { return p * (p + 1) / 2; }

/// Position of element (i, j), i <= j, in vech: row by row over the upper
/// triangle, i.e. (0,0), (0,1), ..., (0,p-1), (1,1), ..., (p-1,p-1).
inline Eigen::Index vech_index(Eigen::Index i, Eigen::Index j, Eigen::Index p) {
    if (i > j) std::swap(i, j);
    return i * p - i * (i - 1) / 2 + (j - i);
}

inline Matrix kron(const Matrix& a, const Matrix& b) {
    Matrix out(a.rows() * b.rows(), a.cols() * b.cols());
    for (Eigen::Index i = 0; i < a.rows(); ++i)
        for (Eigen::Index j = 0; j < a.cols(); ++j)
            out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
    return out;
}

/// Column-major stacking.
inline Vector vec(const Matrix& a) {
    return Eigen::Map<const Vector>(a.data(), a.size());
}

inline Matrix unvec(const Vector& v, Eigen::Index rows, Eigen::Index cols) {
    if (rows * cols != v.size()) throw InvalidArgument("unvec: size mismatch");
    return Eigen::Map<const Matrix>(v.data(), rows, cols);
}

/// True when a is square and |a_ij - a_ji| <= rel_tol * max(1, max|a|).
inline bool is_symmetric(const Matrix& a, double rel_tol = 1e-10) {
    if (a.rows() != a.cols()) return false;
    const double scale = std::max(1.0, a.cwiseAbs().maxCoeff());
    return (a - a.transpose()).cwiseAbs().maxCoeff() <= rel_tol * scale;
}

/// Half-vectorization of a symmetric matrix, upper triangle row by row.
inline Vector vech(const Matrix& a) {
    if (a.rows() != a.cols()) throw InvalidArgument("vech: matrix is not square");
    if (!is_symmetric(a)) throw InvalidArgument("vech: matrix is not symmetric");
    const Eigen::Index p = a.rows();
    Vector out(half_size(p));
    Eigen::Index k = 0;
    for (Eigen::Index i = 0; i < p; ++i)
        for (Eigen::Index j = i; j < p; ++j) out(k++) = a(i, j);
    return out;
}

inline Matrix unvech(const Vector& v) {
    // Solve p(p+1)/2 = size for p.
    const auto p = static_cast<Eigen::Index>(
        std::lround((std::sqrt(8.0 * static_cast<double>(v.size()) + 1.0) - 1.0) / 2.0));
    if (half_size(p) != v.size()) throw InvalidArgument("unvech: length is not triangular");
    Matrix out(p, p);
    Eigen::Index k = 0;
    for (Eigen::Index i = 0; i < p; ++i)
        for (Eigen::Index j = i; j < p; ++j) out(i, j) = out(j, i) = v(k++);
    return out;
}

/// K_pp with K * vec(A) = vec(A') for every p x p matrix A.
inline Matrix commutation(Eigen::Index p) {
    if (p < 1) throw InvalidArgument("commutation: p must be positive");
    Matrix k = Matrix::Zero(p * p, p * p);
    for (Eigen::Index i = 0; i < p; ++i)
        for (Eigen::Index j = 0; j < p; ++j) k(i * p + j, j * p + i) = 1.0;
    return k;
}

struct DuplicationElimination {
    Matrix duplication;  ///< G: vec(A) = G vech(A), p^2 x p(p+1)/2
    Matrix elimination;  ///< H: vech(A) = H vec(A), p(p+1)/2 x p^2
};

inline DuplicationElimination duplication_elimination(Eigen::Index p) {
    if (p < 1) throw InvalidArgument("duplication_elimination: p must be positive");
    const Eigen::Index q = half_size(p);
    Matrix g = Matrix::Zero(p * p, q);
    Matrix h = Matrix::Zero(q, p * p);
    for (Eigen::Index j = 0; j < p; ++j) {
        for (Eigen::Index i = 0; i < p; ++i) {
            const Eigen::Index col = i + j * p;  // vec position of (i, j)
            g(col, vech_index(i, j, p)) = 1.0;
            if (i <= j) h(vech_index(i, j, p), col) = 1.0;
        }
    }
    return {std::move(g), std::move(h)};
}

}  // namespace matalg
}  // namespace ccmvn
