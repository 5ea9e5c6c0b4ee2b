#pragma once

#include "clgen/common/error.hpp"
#include "clgen/numkernel/tensor.hpp"

#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

namespace clgen::nk {

template <typename Scalar>
struct SvdResult {
    using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
    using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

    Matrix U;  // m x r, orthonormal columns
    Vector S;  // r, non-negative, descending
    Matrix V;  // n x r, orthonormal columns
    int sweeps = 0;
};

struct SvdOptions {
    int max_sweeps = 100;
    double tolerance = 1e-12;
};

namespace detail {

// Replaces the columns of q that belong to a (near) zero singular value by
// unit vectors orthogonal to every other column (Gram-Schmidt on the
// standard basis).
template <typename Matrix>
void complete_orthonormal(Matrix& q, std::vector<bool> valid) {
    using Vector = Eigen::Matrix<typename Matrix::Scalar, Eigen::Dynamic, 1>;
    const Eigen::Index m = q.rows();
    Eigen::Index basis = 0;
    for (Eigen::Index j = 0; j < q.cols(); ++j) {
        if (valid[static_cast<std::size_t>(j)])
            continue;
        for (;; ++basis) {
            if (basis >= m)
                throw NumericalError("svd: cannot complete orthonormal basis");
            Vector e = Vector::Unit(m, basis);
            for (int pass = 0; pass < 2; ++pass)
                for (Eigen::Index k = 0; k < q.cols(); ++k)
                    if (valid[static_cast<std::size_t>(k)])
                        e -= q.col(k).dot(e) * q.col(k);
            const auto norm = e.norm();
            if (norm > 1e-6) {
                q.col(j) = e / norm;
                valid[static_cast<std::size_t>(j)] = true;
                ++basis;
                break;
            }
        }
    }
}

// One-sided (Hestenes) Jacobi on the columns of a (m >= n). On return the
// columns of a are mutually orthogonal and v accumulates the rotations.
template <typename Matrix>
int hestenes_jacobi(Matrix& a, Matrix& v, const SvdOptions& opts) {
    using Scalar = typename Matrix::Scalar;
    const Eigen::Index n = a.cols();
    // columns below this squared norm are numerically zero and left alone
    const Scalar negligible = a.squaredNorm() * Scalar(1e-30);
    for (int sweep = 1; sweep <= opts.max_sweeps; ++sweep) {
        Scalar off = 0;
        for (Eigen::Index p = 0; p + 1 < n; ++p) {
            for (Eigen::Index q = p + 1; q < n; ++q) {
                const Scalar alpha = a.col(p).squaredNorm();
                const Scalar beta = a.col(q).squaredNorm();
                const Scalar gamma = a.col(p).dot(a.col(q));
                if (alpha <= negligible || beta <= negligible)
                    continue;
                const Scalar cosine = std::abs(gamma) / std::sqrt(alpha * beta);
                off = std::max(off, cosine);
                if (cosine <= Scalar(opts.tolerance))
                    continue;
                const Scalar zeta = (beta - alpha) / (Scalar(2) * gamma);
                const Scalar t = (zeta >= 0 ? Scalar(1) : Scalar(-1)) /
                                 (std::abs(zeta) + std::sqrt(Scalar(1) + zeta * zeta));
                const Scalar c = Scalar(1) / std::sqrt(Scalar(1) + t * t);
                const Scalar s = c * t;
                for (Eigen::Index i = 0; i < a.rows(); ++i) {
                    const Scalar ap = a(i, p), aq = a(i, q);
                    a(i, p) = c * ap - s * aq;
                    a(i, q) = s * ap + c * aq;
                }
                for (Eigen::Index i = 0; i < v.rows(); ++i) {
                    const Scalar vp = v(i, p), vq = v(i, q);
                    v(i, p) = c * vp - s * vq;
                    v(i, q) = s * vp + c * vq;
                }
            }
        }
        if (off <= Scalar(opts.tolerance))
            return sweep;
    }
    throw NumericalError("svd: one-sided Jacobi did not converge");
}

} // namespace detail

/// Thin singular value decomposition by one-sided Jacobi rotations.
///
/// Singular vectors belonging to vanishing singular values are completed to
/// an orthonormal set, so U and V always have orthonormal columns.
template <typename Derived>
SvdResult<typename Derived::Scalar> svd(const Eigen::MatrixBase<Derived>& z, const SvdOptions& opts = {}) {
    using Scalar = typename Derived::Scalar;
    using Matrix = typename SvdResult<Scalar>::Matrix;

    const Eigen::Index m = z.rows(), n = z.cols();
    if (m < 1 || n < 1)
        throw InputError("svd: empty matrix");
    if (!z.allFinite())
        throw NumericalError("svd: non-finite input");

    const bool transposed = m < n;
    Matrix a = transposed ? Matrix(z.transpose()) : Matrix(z);
    const Eigen::Index r = a.cols();
    Matrix v = Matrix::Identity(r, r);

    SvdResult<Scalar> out;
    out.sweeps = detail::hestenes_jacobi(a, v, opts);

    Eigen::Matrix<Scalar, Eigen::Dynamic, 1> sigma(r);
    for (Eigen::Index j = 0; j < r; ++j)
        sigma(j) = a.col(j).norm();

    std::vector<Eigen::Index> order(static_cast<std::size_t>(r));
    std::iota(order.begin(), order.end(), Eigen::Index{0});
    std::stable_sort(order.begin(), order.end(), [&](Eigen::Index x, Eigen::Index y) { return sigma(x) > sigma(y); });

    const Scalar largest = r > 0 ? sigma(order.front()) : Scalar(0);
    const Scalar cutoff = std::max(largest, Scalar(1)) * Scalar(opts.tolerance);

    Matrix left(a.rows(), r), right(r, r);
    out.S.resize(r);
    std::vector<bool> valid(static_cast<std::size_t>(r));
    for (Eigen::Index k = 0; k < r; ++k) {
        const Eigen::Index j = order[static_cast<std::size_t>(k)];
        out.S(k) = sigma(j);
        right.col(k) = v.col(j);
        valid[static_cast<std::size_t>(k)] = sigma(j) > cutoff;
        left.col(k) = valid[static_cast<std::size_t>(k)] ? Matrix(a.col(j) / sigma(j)) : Matrix::Zero(a.rows(), 1);
    }
    detail::complete_orthonormal(left, valid);

    if (transposed) {
        out.U = std::move(right);
        out.V = std::move(left);
    } else {
        out.U = std::move(left);
        out.V = std::move(right);
    }
    return out;
}

/// Sum of singular values.
template <typename Derived>
typename Derived::Scalar nuclear_norm(const Eigen::MatrixBase<Derived>& z) {
    return svd(z).S.sum();
}

/// U * V^T from the thin SVD: the gradient of the nuclear norm where the
/// singular values are distinct and non-zero, and a subgradient otherwise.
/// The zero matrix maps to the zero matrix.
template <typename Derived>
typename SvdResult<typename Derived::Scalar>::Matrix nuclear_norm_grad(const Eigen::MatrixBase<Derived>& z) {
    using Matrix = typename SvdResult<typename Derived::Scalar>::Matrix;
    if (z.isZero(0))
        return Matrix::Zero(z.rows(), z.cols());
    const auto res = svd(z);
    return res.U * res.V.transpose();
}

/// Number of singular values above rel_tol times the largest one.
template <typename Derived>
int numerical_rank(const Eigen::MatrixBase<Derived>& z, double rel_tol = 1e-6) {
    if (!(rel_tol > 0.0 && rel_tol < 1.0))
        throw InputError("numerical_rank: rel_tol must lie in (0, 1)");
    const auto s = svd(z).S;
    if (s.size() == 0 || s(0) == 0)
        return 0;
    int rank = 0;
    for (Eigen::Index i = 0; i < s.size(); ++i)
        if (s(i) > rel_tol * s(0))
            ++rank;
    return rank;
}

struct NormalizeStats {
    int guarded_rows = 0;
};

inline constexpr double kRowNormEpsilon = 1e-12;

/// Scales every row to unit L2 norm. Rows with norm below 1e-12 get the
/// epsilon added to their denominator and are counted in stats.
template <typename Derived>
Eigen::Matrix<typename Derived::Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>
row_l2_normalize(const Eigen::MatrixBase<Derived>& z, NormalizeStats* stats = nullptr) {
    using Scalar = typename Derived::Scalar;
    Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> out(z.rows(), z.cols());
    for (Eigen::Index i = 0; i < z.rows(); ++i) {
        Scalar norm = z.row(i).norm();
        if (norm < Scalar(kRowNormEpsilon)) {
            norm += Scalar(kRowNormEpsilon);
            if (stats)
                ++stats->guarded_rows;
        }
        out.row(i) = z.row(i) / norm;
    }
    return out;
}

// Tensor overloads; these operate on the matrix view of the tensor.
SvdResult<double> svd(const Tensor& z);
double nuclear_norm(const Tensor& z);
Tensor nuclear_norm_grad(const Tensor& z);
int numerical_rank(const Tensor& z, double rel_tol = 1e-6);
Tensor row_l2_normalize(const Tensor& z, NormalizeStats* stats = nullptr);

} // namespace clgen::nk
