#include "proxtrend/linalg.hpp"

#include <cmath>
#include <cstddef>
#include <utility>

namespace proxtrend {

namespace {

void check_grid(const std::vector<double>& grid) {
    if (grid.size() < 2) throw InvalidGrid("grid must have at least 2 points");
    for (std::size_t i = 1; i < grid.size(); ++i) {
        if (!(grid[i] > grid[i - 1])) {
            throw InvalidGrid("grid must be strictly increasing");
        }
    }
}

// Banded difference operators, diagonal-major. band(j)[d*rows + i] is entry
// (i, i+d) of the order-j operator, which has rows = n-j and width j+1.
std::vector<double> build_diff_bands(const std::vector<double>& grid, int order) {
    const int n = static_cast<int>(grid.size());
    // order 1: rows of (-1, 1)
    std::vector<double> cur(static_cast<std::size_t>(2) * (n - 1));
    for (int i = 0; i < n - 1; ++i) {
        cur[i] = -1.0;
        cur[(n - 1) + i] = 1.0;
    }
    for (int j = 1; j < order; ++j) {
        const int rows_j = n - j;       // rows of the order-j operator
        const int rows_next = n - j - 1;
        const int width_j = j + 1;
        std::vector<double> next(static_cast<std::size_t>(j + 2) * rows_next, 0.0);
        auto cur_at = [&](int d, int i) { return cur[static_cast<std::size_t>(d) * rows_j + i]; };
        for (int i = 0; i < rows_next; ++i) {
            const double s_lo = static_cast<double>(j) / (grid[i + j] - grid[i]);
            const double s_hi = static_cast<double>(j) / (grid[i + 1 + j] - grid[i + 1]);
            for (int d = 0; d <= j + 1; ++d) {
                double v = 0.0;
                if (d >= 1 && d - 1 < width_j) v += s_hi * cur_at(d - 1, i + 1);
                if (d < width_j) v -= s_lo * cur_at(d, i);
                next[static_cast<std::size_t>(d) * rows_next + i] = v;
            }
        }
        cur = std::move(next);
    }
    return cur;
}

}  // namespace

DiffOperator::DiffOperator(std::vector<double> grid, int order)
    : order_(order), n_(static_cast<int>(grid.size())), grid_(std::move(grid)) {
    check_grid(grid_);
    if (order_ < 1 || order_ > 4) throw OrderTooHigh("difference order must be in 1..4");
    if (n_ < order_ + 1) throw OrderTooHigh("grid too short for difference order");
    bands_ = build_diff_bands(grid_, order_);
}

Vector DiffOperator::apply(const Vector& v) const {
    if (v.size() != n_) throw DimMismatch("apply: vector length != n");
    const int m = rows();
    Vector out = Vector::Zero(m);
    for (int d = 0; d < width(); ++d) {
        const double* bd = bands_.data() + static_cast<std::size_t>(d) * m;
        for (int i = 0; i < m; ++i) out[i] += bd[i] * v[i + d];
    }
    return out;
}

Vector DiffOperator::apply_transpose(const Vector& w) const {
    if (w.size() != rows()) throw DimMismatch("apply_transpose: vector length != rows");
    const int m = rows();
    Vector out = Vector::Zero(n_);
    for (int d = 0; d < width(); ++d) {
        const double* bd = bands_.data() + static_cast<std::size_t>(d) * m;
        for (int i = 0; i < m; ++i) out[i + d] += bd[i] * w[i];
    }
    return out;
}

Matrix DiffOperator::dense() const {
    Matrix out = Matrix::Zero(rows(), n_);
    for (int i = 0; i < rows(); ++i)
        for (int d = 0; d < width(); ++d) out(i, i + d) = band(i, d);
    return out;
}

ReparamMatrix::ReparamMatrix(std::vector<double> grid, int k, ReparamScheme scheme)
    : scheme_(scheme), k_(k), n_(static_cast<int>(grid.size())) {
    check_grid(grid);
    if (k < 1 || k > 3) throw OrderTooHigh("reparameterization requires k in 1..3");
    if (n_ < k + 2) throw OrderTooHigh("grid too short for order k+1");
    width_ = (scheme == ReparamScheme::T1) ? k + 2 : k + 1;
    bands_.assign(static_cast<std::size_t>(width_) * n_, 0.0);
    auto set = [&](int row, int col, double v) {
        bands_[static_cast<std::size_t>(row - col) * n_ + row] = v;
    };
    if (scheme == ReparamScheme::T1) {
        for (int i = 0; i <= k; ++i) set(i, i, 1.0);
        DiffOperator dop(grid, k + 1);
        for (int i = 0; i < dop.rows(); ++i)
            for (int d = 0; d < dop.width(); ++d) set(i + k + 1, i + d, dop.band(i, d));
    } else {
        for (int i = 0; i < k; ++i) set(i, i, 1.0);
        DiffOperator dop(grid, k);
        for (int i = 0; i < dop.rows(); ++i) {
            const double s = static_cast<double>(k) / (grid[i + k] - grid[i]);
            for (int d = 0; d < dop.width(); ++d) set(i + k, i + d, s * dop.band(i, d));
        }
        // Pseudo-solve matrix for the TV bisection bound over the slice:
        // columns of D1 pushed through the tridiagonal Gram factorization.
        const int ns = slice_length();
        if (ns >= 2) {
            pseudosolve_.resize(ns - 1, ns);
            Vector col = Vector::Zero(ns - 1);
            for (int j = 0; j < ns; ++j) {
                col.setZero();
                if (j < ns - 1) col[j] = -1.0;
                if (j > 0) col[j - 1] = 1.0;
                pseudosolve_.col(j) = solve_diff_gram(col);
            }
        } else {
            pseudosolve_.resize(0, ns);
        }
    }
}

Vector ReparamMatrix::apply(const Vector& beta) const {
    if (beta.size() != n_) throw DimMismatch("apply: vector length != n");
    Vector out = Vector::Zero(n_);
    for (int d = 0; d < width_; ++d) {
        const double* bd = bands_.data() + static_cast<std::size_t>(d) * n_;
        for (int i = d; i < n_; ++i) out[i] += bd[i] * beta[i - d];
    }
    return out;
}

Vector ReparamMatrix::forward_solve(const Vector& theta) const {
    if (theta.size() != n_) throw DimMismatch("forward_solve: vector length != n");
    Vector beta(n_);
    for (int i = 0; i < n_; ++i) {
        double acc = theta[i];
        const int dmax = std::min(width_ - 1, i);
        for (int d = 1; d <= dmax; ++d) acc -= band(i, d) * beta[i - d];
        const double piv = band(i, 0);
        if (piv == 0.0 || !std::isfinite(1.0 / piv)) {
            throw SingularMatrix("forward_solve: zero pivot");
        }
        beta[i] = acc / piv;
    }
    return beta;
}

Vector ReparamMatrix::transpose_solve(const Vector& v) const {
    if (v.size() != n_) throw DimMismatch("transpose_solve: vector length != n");
    Vector w(n_);
    for (int i = n_ - 1; i >= 0; --i) {
        double acc = v[i];
        const int dmax = std::min(width_ - 1, n_ - 1 - i);
        for (int d = 1; d <= dmax; ++d) acc -= band(i + d, d) * w[i + d];
        const double piv = band(i, 0);
        if (piv == 0.0 || !std::isfinite(1.0 / piv)) {
            throw SingularMatrix("transpose_solve: zero pivot");
        }
        w[i] = acc / piv;
    }
    return w;
}

const Matrix& ReparamMatrix::pseudosolve() const {
    if (scheme_ != ReparamScheme::T2) {
        throw InvalidConfig("pseudosolve is only defined for the T2 scheme");
    }
    return pseudosolve_;
}

Matrix ReparamMatrix::dense() const {
    Matrix out = Matrix::Zero(n_, n_);
    for (int i = 0; i < n_; ++i)
        for (int d = 0; d <= std::min(width_ - 1, i); ++d) out(i, i - d) = band(i, d);
    return out;
}

Vector solve_diff_gram(const Vector& rhs) {
    // Thomas algorithm specialized to tridiag(-1, 2, -1).
    const int m = static_cast<int>(rhs.size());
    Vector z(m);
    if (m == 0) return z;
    // forward sweep: pivots are (i+2)/(i+1)
    z[0] = rhs[0] / 2.0;
    for (int i = 1; i < m; ++i) {
        const double piv = static_cast<double>(i + 2) / (i + 1);
        z[i] = (rhs[i] + z[i - 1]) / piv;
    }
    for (int i = m - 2; i >= 0; --i) {
        z[i] += z[i + 1] * static_cast<double>(i + 1) / (i + 2);
    }
    return z;
}

}  // namespace proxtrend
