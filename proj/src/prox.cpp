#include "proxtrend/prox.hpp"

#include <cmath>
#include <vector>

namespace proxtrend {

ProxResult soft_threshold(const Vector& beta, double lambda) {
    if (!(lambda > 0.0)) throw InvalidLambda("soft_threshold: lambda must be positive");
    ProxResult out;
    out.point.resize(beta.size());
    double l1 = 0.0;
    for (Eigen::Index i = 0; i < beta.size(); ++i) {
        const double mag = std::abs(beta[i]) - lambda;
        const double v = mag > 0.0 ? (beta[i] > 0.0 ? mag : -mag) : 0.0;
        out.point[i] = v;
        l1 += std::abs(v);
    }
    out.objective = l1;
    return out;
}

// Dynamic program over the derivative of the forward messages
//   M_{t+1}(z) = (z - y_{t+1})^2 / 2 + min_u [ M_t(u) + lambda |z - u| ].
// The inner minimization clips the derivative of M_t to [-lambda, lambda];
// the clip points tm/tp become the backtracking clamps. The derivative is
// piecewise linear and nondecreasing, kept as knot positions plus affine
// increments, with affine tails. The right tail and right-side increments
// are stored negated so both scans accumulate by addition.
ProxResult fused_lasso(const Vector& beta, double lambda) {
    if (!(lambda > 0.0)) throw InvalidLambda("fused_lasso: lambda must be positive");
    const int n = static_cast<int>(beta.size());
    ProxResult out;
    out.point.resize(n);
    if (n == 0) return out;
    if (n == 1) {
        out.point = beta;
        return out;
    }
    const double* y = beta.data();
    double* sol = out.point.data();

    std::vector<double> x(2 * n), a(2 * n), b(2 * n);
    std::vector<double> tm(n - 1), tp(n - 1);

    tm[0] = y[0] - lambda;
    tp[0] = y[0] + lambda;
    int l = n - 1;
    int r = n;
    x[l] = tm[0];
    x[r] = tp[0];
    a[l] = 1.0;
    b[l] = lambda - y[0];
    a[r] = -1.0;
    b[r] = y[0] + lambda;
    double afirst = 1.0;
    double bfirst = -lambda - y[1];
    double alast = -1.0;
    double blast = -lambda + y[1];

    for (int k = 1; k < n - 1; ++k) {
        // left scan: first region where the derivative exceeds -lambda
        double alo = afirst, blo = bfirst;
        int lo = l;
        for (; lo <= r; ++lo) {
            if (alo * x[lo] + blo > -lambda) break;
            alo += a[lo];
            blo += b[lo];
        }
        tm[k] = (-lambda - blo) / alo;
        l = lo - 1;
        x[l] = tm[k];

        // right scan: first region (from above) where the derivative drops
        // below lambda; coefficients are negated on this side
        double ahi = alast, bhi = blast;
        int hi = r;
        for (; hi >= l; --hi) {
            if (-(ahi * x[hi] + bhi) < lambda) break;
            ahi += a[hi];
            bhi += b[hi];
        }
        tp[k] = (lambda + bhi) / (-ahi);
        r = hi + 1;
        x[r] = tp[k];

        a[l] = alo;
        b[l] = blo + lambda;
        a[r] = ahi;
        b[r] = bhi + lambda;
        afirst = 1.0;
        bfirst = -lambda - y[k + 1];
        alast = -1.0;
        blast = -lambda + y[k + 1];
    }

    // final minimization: zero of the unclipped last derivative
    double alo = afirst, blo = bfirst;
    int lo = l;
    for (; lo <= r; ++lo) {
        if (alo * x[lo] + blo > 0.0) break;
        alo += a[lo];
        blo += b[lo];
    }
    sol[n - 1] = -blo / alo;
    for (int k = n - 2; k >= 0; --k) {
        if (sol[k + 1] > tp[k]) {
            sol[k] = tp[k];
        } else if (sol[k + 1] < tm[k]) {
            sol[k] = tm[k];
        } else {
            sol[k] = sol[k + 1];
        }
    }

    double tv = 0.0;
    for (int i = 0; i + 1 < n; ++i) tv += std::abs(sol[i + 1] - sol[i]);
    out.objective = tv;
    return out;
}

EnvelopeResult envelope_value_grad(const ProxFn& g_prox, const Vector& z, double lambda) {
    if (!(lambda > 0.0)) throw InvalidLambda("envelope_value_grad: lambda must be positive");
    const ProxResult p = g_prox(z, lambda);
    EnvelopeResult out;
    out.grad = (z - p.point) / lambda;
    out.value = p.objective + (z - p.point).squaredNorm() / (2.0 * lambda);
    return out;
}

}  // namespace proxtrend
