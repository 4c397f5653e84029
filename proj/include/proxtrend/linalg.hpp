#ifndef PROXTREND_LINALG_HPP
#define PROXTREND_LINALG_HPP

#include <Eigen/Core>
#include <vector>

#include "proxtrend/errors.hpp"

namespace proxtrend {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// Banded difference operator of a given order on a strictly increasing grid.
///
/// For order d the matrix is (n-d) x n; row i has exactly d+1 nonzeros in
/// columns i..i+d. On the unit grid x_i = i the entries reduce to the signed
/// binomial pattern of the standard discrete difference operator. On uneven
/// grids the operator is built by the scaled recursion
///   order j+1 = first_difference * diag(j / (x_{i+j} - x_i)) * order j,
/// so that annihilating polynomials of degree < order is preserved.
class DiffOperator {
public:
    /// order = k+1 >= 1. Requires n >= order+1 and a strictly increasing grid.
    DiffOperator(std::vector<double> grid, int order);

    int order() const { return order_; }
    int n() const { return n_; }
    int rows() const { return n_ - order_; }
    int width() const { return order_ + 1; }
    const std::vector<double>& grid() const { return grid_; }

    /// Entry (row, row + offset), offset in [0, width).
    double band(int row, int offset) const { return bands_[static_cast<std::size_t>(offset) * rows() + row]; }

    /// Banded matrix-vector product, O(n * width).
    Vector apply(const Vector& v) const;

    /// Banded transposed product D^T w, O(n * width).
    Vector apply_transpose(const Vector& w) const;

    /// l1 norm of D v (the trend-filter penalty value at v).
    double penalty(const Vector& v) const { return apply(v).lpNorm<1>(); }

    Matrix dense() const;

private:
    int order_;
    int n_;
    std::vector<double> grid_;
    std::vector<double> bands_;  // diagonal-major: bands_[d * rows + i] = entry (i, i+d)
};

enum class ReparamScheme { T1, T2 };

/// Lower-triangular banded change of variables theta = T beta.
///
/// T1 stacks the first k+1 identity rows over the order-(k+1) difference
/// operator, so the constrained slice theta[k+1..n) carries D^(k+1) beta
/// directly. T2 stacks the first k identity rows over the row-scaled
/// order-k operator, leaving one first-difference factor to be absorbed by
/// the TV-epigraph constraint on theta[k..n).
class ReparamMatrix {
public:
    ReparamMatrix(std::vector<double> grid, int k, ReparamScheme scheme);

    ReparamScheme scheme() const { return scheme_; }
    int k() const { return k_; }
    int n() const { return n_; }
    int width() const { return width_; }

    /// First index (0-based) of the constrained slice of theta.
    int slice_begin() const { return scheme_ == ReparamScheme::T1 ? k_ + 1 : k_; }
    int slice_length() const { return n_ - slice_begin(); }

    /// Entry (row, row - offset), offset in [0, width).
    double band(int row, int offset) const { return bands_[static_cast<std::size_t>(offset) * n_ + row]; }

    /// theta = T beta, O(n * width).
    Vector apply(const Vector& beta) const;

    /// Solves T beta = theta by banded forward substitution, O(n * width).
    Vector forward_solve(const Vector& theta) const;

    /// Solves T^T w = v by banded back substitution, O(n * width).
    Vector transpose_solve(const Vector& v) const;

    /// Dense (ns-1) x ns matrix [D1 D1^T]^{-1} D1 over the constrained slice,
    /// used as the TV-epigraph bisection bound. Built once (T2 only).
    const Matrix& pseudosolve() const;

    Matrix dense() const;

private:
    ReparamScheme scheme_;
    int k_;
    int n_;
    int width_;
    std::vector<double> bands_;  // diagonal-major: bands_[d * n + i] = entry (i, i-d)
    Matrix pseudosolve_;
};

/// Solves the tridiagonal system (D1 D1^T) z = rhs, where D1 is the
/// first-difference matrix with m+1 columns (so the Gram matrix is m x m
/// with 2 on the diagonal and -1 off it). O(m).
Vector solve_diff_gram(const Vector& rhs);

}  // namespace proxtrend

#endif  // PROXTREND_LINALG_HPP
