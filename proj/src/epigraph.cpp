#include "proxtrend/epigraph.hpp"

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include <algorithm>
#include <cstdio>
#include <cstdlib>
#include <cmath>
#include <limits>
#include <sstream>
#include <utility>
#include <vector>

namespace proxtrend {

long dbg_reason[8] = {0,0,0,0,0,0,0,0};


namespace {

// Shared bisection driver for the scalar-coupled epigraph projections.
// F(lam) = g(prox(v, lam)) - lam - alpha is strictly decreasing with
// F(0+) > 0 for exterior points; the upper end of the bracket is the
// larger of the prox-specific bound and -alpha (the apex case).
template <class Prox, class Penalty>
Projection project_epigraph_bisect(const Vector& v, double alpha, Prox prox, Penalty penalty,
                                   double bound) {
    Projection out;
    const double g0 = penalty(v);
    if (g0 <= alpha) {
        out.point = v;
        out.alpha = alpha;
        return out;
    }
    double hi = std::max(bound, -alpha);
    if (!(hi > 0.0)) hi = std::numeric_limits<double>::min();
    ProxResult pr;
    auto eval = [&](double lam) {
        pr = prox(v, lam);
        return pr.objective - lam - alpha;
    };
    int it = 1;
    double fhi = eval(hi);
    while (fhi > 0.0) {
        if (++it > 80) throw BracketError("epigraph projection: failed to bracket the root");
        hi = 2.0 * hi + 1.0;
        fhi = eval(hi);
    }
    double lo = 0.0;
    double lam = hi;
    const double width_tol = 1e-10 * std::max(1.0, hi);
    while (hi - lo > width_tol) {
        const double mid = 0.5 * (lo + hi);
        const double fmid = eval(mid);
        lam = mid;
        ++it;
        if (std::abs(fmid) <= 1e-10) break;
        if (fmid > 0.0) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    // At the root, alpha + lam equals the penalty at the prox point; report
    // the penalty so the returned pair sits exactly on the boundary, which
    // keeps the squared distance insensitive (second order) to the
    // bisection tolerance.
    out.point = std::move(pr.point);
    out.alpha = pr.objective;
    out.distance_sq = (v - out.point).squaredNorm() + (out.alpha - alpha) * (out.alpha - alpha);
    out.iterations = it;
    return out;
}

double tv_seminorm(const Vector& v) {
    double tv = 0.0;
    for (Eigen::Index i = 0; i + 1 < v.size(); ++i) tv += std::abs(v[i + 1] - v[i]);
    return tv;
}

}  // namespace

Projection project_epi_l1(const Vector& theta_slice, double alpha) {
    const double bound = theta_slice.size() > 0 ? theta_slice.cwiseAbs().maxCoeff() : 0.0;
    return project_epigraph_bisect(
        theta_slice, alpha, [](const Vector& v, double lam) { return soft_threshold(v, lam); },
        [](const Vector& v) { return v.lpNorm<1>(); }, bound);
}

Projection project_epi_tv(const Vector& theta_slice, double alpha, const Matrix& cached_pseudosolve) {
    if (cached_pseudosolve.cols() != theta_slice.size()) {
        throw DimMismatch("project_epi_tv: pseudo-solve matrix does not match slice length");
    }
    const double bound =
        cached_pseudosolve.rows() > 0 ? (cached_pseudosolve * theta_slice).cwiseAbs().maxCoeff() : 0.0;
    return project_epigraph_bisect(
        theta_slice, alpha, [](const Vector& v, double lam) { return fused_lasso(v, lam); },
        [](const Vector& v) { return tv_seminorm(v); }, bound);
}

// ---------------------------------------------------------------------------
// Shape-restricted projection: ADMM on the lifted QP
//   min 1/2 ||eta - beta||^2 + 1/2 (t - alpha)^2
//   s.t. (D^(k+1) eta, t) in the l1-ball epigraph, sign cones, bounds.
// ---------------------------------------------------------------------------

namespace {

// Cholesky of a symmetric positive definite banded matrix, lower storage:
// bands[d*n + i] = A(i, i-d), d = 0..sb.
class BandedLLT {
public:
    void factor(std::vector<double> bands, int n, int sb) {
        L_ = std::move(bands);
        n_ = n;
        sb_ = sb;
        auto at = [&](int i, int d) -> double& { return L_[static_cast<std::size_t>(d) * n_ + i]; };
        for (int j = 0; j < n_; ++j) {
            double diag = at(j, 0);
            for (int d = 1; d <= sb_ && j - d >= 0; ++d) diag -= at(j, d) * at(j, d);
            if (!(diag > 0.0)) throw SingularMatrix("banded Cholesky: non-positive pivot");
            const double ljj = std::sqrt(diag);
            at(j, 0) = ljj;
            const int imax = std::min(j + sb_, n_ - 1);
            for (int i = j + 1; i <= imax; ++i) {
                double v = at(i, i - j);
                for (int k = std::max(0, i - sb_); k < j; ++k) v -= at(i, i - k) * at(j, j - k);
                at(i, i - j) = v / ljj;
            }
        }
    }

    void solve_inplace(Vector& x) const {
        auto at = [&](int i, int d) { return L_[static_cast<std::size_t>(d) * n_ + i]; };
        for (int i = 0; i < n_; ++i) {
            double acc = x[i];
            for (int d = 1; d <= sb_ && i - d >= 0; ++d) acc -= at(i, d) * x[i - d];
            x[i] = acc / at(i, 0);
        }
        for (int i = n_ - 1; i >= 0; --i) {
            double acc = x[i];
            for (int d = 1; d <= sb_ && i + d < n_; ++d) acc -= at(i + d, d) * x[i + d];
            x[i] = acc / at(i, 0);
        }
    }

    bool ready() const { return n_ > 0; }

private:
    std::vector<double> L_;
    int n_ = 0;
    int sb_ = 0;
};

void accumulate_gram(std::vector<double>& bands, int n, int sb, const DiffOperator& op, double rho) {
    // bands += rho * op^T op (lower banded storage)
    for (int r = 0; r < op.rows(); ++r) {
        for (int a = 0; a < op.width(); ++a) {
            const double ea = op.band(r, a);
            for (int b = 0; b <= a; ++b) {
                const double eb = op.band(r, b);
                // entry (r+a, r+b), offset a-b
                bands[static_cast<std::size_t>(a - b) * n + (r + a)] += rho * ea * eb;
            }
        }
    }
    (void)sb;
}

}  // namespace

// Copy-resets wrapper: clones of a projector start with a cold cache.
template <class T>
struct ResetOnCopy {
    std::unique_ptr<T> ptr;
    ResetOnCopy() = default;
    ResetOnCopy(const ResetOnCopy&) {}
    ResetOnCopy& operator=(const ResetOnCopy&) {
        ptr.reset();
        return *this;
    }
};

// Factorized active-set system reused while the classification is stable.
struct PolishCache {
    bool include_epi = false;
    bool face_active = false;
    std::vector<int> l1_state;
    std::vector<char> mono_active, curv_active, lower_active, upper_active;
    Eigen::SparseMatrix<double> E;
    std::vector<double> rhs;
    Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> ldlt;
    bool ready = false;
};

struct ShapeProjector::Impl {
    DiffOperator diff;
    std::optional<DiffOperator> mono_op;
    std::optional<DiffOperator> curv_op;
    ShapeSpec shape;
    int n;

    // warm-start state for the epigraph-mode solve
    ResetOnCopy<PolishCache> pcache;
    bool warm = false;
    double rho = 1.0;
    Vector z1, u1, z2, u2, z3, u3, z4, u4;
    double ztau = 0.0, utau = 0.0;
    BandedLLT llt;
    double factored_rho = -1.0;

    explicit Impl(const DiffOperator& d, ShapeSpec s) : diff(d), shape(std::move(s)), n(d.n()) {
        if (shape.monotone != Monotone::none) mono_op.emplace(diff.grid(), 1);
        if (shape.curvature != Curvature::none) curv_op.emplace(diff.grid(), 2);
        if (shape.lower && shape.lower->size() != n) throw DimMismatch("lower bound length != n");
        if (shape.upper && shape.upper->size() != n) throw DimMismatch("upper bound length != n");
    }

    double cone_violation(const Vector& beta) const {
        double v = 0.0;
        if (mono_op) {
            const Vector d = mono_op->apply(beta);
            const double s = shape.monotone == Monotone::increasing ? 1.0 : -1.0;
            v = std::max(v, (-s * d.array()).maxCoeff());
        }
        if (curv_op) {
            const Vector d = curv_op->apply(beta);
            const double s = shape.curvature == Curvature::convex ? 1.0 : -1.0;
            v = std::max(v, (-s * d.array()).maxCoeff());
        }
        if (shape.lower) v = std::max(v, (*shape.lower - beta).maxCoeff());
        if (shape.upper) v = std::max(v, (beta - *shape.upper).maxCoeff());
        return v;
    }

    Vector clamp_mono(const Vector& w) const {
        if (shape.monotone == Monotone::increasing) return w.cwiseMax(0.0);
        return w.cwiseMin(0.0);
    }
    Vector clamp_curv(const Vector& w) const {
        if (shape.curvature == Curvature::convex) return w.cwiseMax(0.0);
        return w.cwiseMin(0.0);
    }
    Vector clamp_bounds(Vector w) const {
        if (shape.lower) w = w.cwiseMax(*shape.lower);
        if (shape.upper) w = w.cwiseMin(*shape.upper);
        return w;
    }

    int bandwidth(bool include_epi) const {
        int sb = 0;
        if (include_epi) sb = diff.order();
        if (mono_op) sb = std::max(sb, 1);
        if (curv_op) sb = std::max(sb, 2);
        return sb;
    }

    std::vector<double> normal_bands(double rho_cur, bool include_epi) const {
        const int sb = bandwidth(include_epi);
        std::vector<double> bands(static_cast<std::size_t>(sb + 1) * n, 0.0);
        for (int i = 0; i < n; ++i) bands[i] = 1.0;
        if (include_epi) accumulate_gram(bands, n, sb, diff, rho_cur);
        if (mono_op) accumulate_gram(bands, n, sb, *mono_op, rho_cur);
        if (curv_op) accumulate_gram(bands, n, sb, *curv_op, rho_cur);
        if (shape.lower || shape.upper) {
            for (int i = 0; i < n; ++i) bands[i] += rho_cur;
        }
        return bands;
    }

    double epi_violation(const Vector& eta, double t) const { return diff.penalty(eta) - t; }

    // Active-set polish: classify the l1 rows and cone/bound rows from the
    // ADMM iterate, project (beta, alpha) onto the implied equality set via
    // the normal equations E E^T nu = E x0 - e, and refine the
    // classification from the KKT residuals (release rows whose multiplier
    // leaves the subdifferential, re-pin rows the candidate violates). The
    // result is kept only with a full certificate: exact feasibility plus
    // valid multiplier signs. The assembled system and its factorization are
    // cached across calls while the classification is unchanged, which is
    // the common case along an HMC trajectory.
    bool try_polish(const Vector& beta, double alpha, bool include_epi, bool from_iterate,
                    Vector& eta_out, double& t_out) {
        const int d = n + 1;
        const int m1 = include_epi ? diff.rows() : 0;
        const int m2 = mono_op ? mono_op->rows() : 0;
        const int m3 = curv_op ? curv_op->rows() : 0;

        if (!pcache.ptr) pcache.ptr = std::make_unique<PolishCache>();
        PolishCache& cache = *pcache.ptr;

        std::vector<int> l1_state(m1, 0);
        bool face_active = false;
        std::vector<char> mono_active(m2, 0), curv_active(m3, 0);
        std::vector<char> lower_active(n, 0), upper_active(n, 0);
        if (cache.ready && cache.include_epi == include_epi &&
            static_cast<int>(cache.l1_state.size()) == m1) {
            // the previous call's certified active set is the best starting
            // guess along a trajectory
            l1_state = cache.l1_state;
            face_active = cache.face_active;
            mono_active = cache.mono_active;
            curv_active = cache.curv_active;
            lower_active = cache.lower_active;
            upper_active = cache.upper_active;
        } else {
            if (from_iterate) {
                if (include_epi) {
                    const double ztol = 1e-7 * std::max(1.0, z1.cwiseAbs().maxCoeff());
                    face_active = ztau - z1.lpNorm<1>() <= 1e-6 * std::max(1.0, ztau);
                    for (int r = 0; r < m1; ++r) {
                        l1_state[r] = std::abs(z1[r]) <= ztol ? 0 : (z1[r] > 0.0 ? 1 : -1);
                    }
                }
                if (mono_op) {
                    const double ztol = 1e-7 * std::max(1.0, z2.cwiseAbs().maxCoeff());
                    for (int r = 0; r < m2; ++r) mono_active[r] = std::abs(z2[r]) <= ztol;
                }
                if (curv_op) {
                    const double ztol = 1e-7 * std::max(1.0, z3.cwiseAbs().maxCoeff());
                    for (int r = 0; r < m3; ++r) curv_active[r] = std::abs(z3[r]) <= ztol;
                }
                for (int i = 0; i < n && (shape.lower || shape.upper); ++i) {
                    if (shape.lower && std::abs(z4[i] - (*shape.lower)[i]) <= 1e-9) {
                        lower_active[i] = 1;
                    } else if (shape.upper && std::abs(z4[i] - (*shape.upper)[i]) <= 1e-9) {
                        upper_active[i] = 1;
                    }
                }
            } else {
                { extern long dbg_reason[8]; ++dbg_reason[4]; }
                return false;  // nothing to identify an active set from
            }
        }
        const double mono_sgn = shape.monotone == Monotone::increasing ? 1.0 : -1.0;
        const double curv_sgn = shape.curvature == Curvature::convex ? 1.0 : -1.0;

        Vector x0(d);
        x0.head(n) = beta;
        x0[d - 1] = alpha;

        for (int round = 0; round < 10; ++round) {
            const bool cache_hit =
                round == 0 && cache.ready && cache.include_epi == include_epi &&
                cache.face_active == face_active && cache.l1_state == l1_state &&
                cache.mono_active == mono_active && cache.curv_active == curv_active &&
                cache.lower_active == lower_active && cache.upper_active == upper_active;

            std::vector<Eigen::Triplet<double>> trips;
            std::vector<double> rhs;
            std::vector<int> kind;  // 0 l1-zero, 1 face, 2 mono, 3 curv, 4 lower, 5 upper
            std::vector<int> ref;
            int rows = 0;
            auto push_op_row = [&](const DiffOperator& op, int r) {
                if (cache_hit) return;
                for (int a = 0; a < op.width(); ++a) trips.emplace_back(rows, r + a, op.band(r, a));
            };
            int face_idx = -1;
            if (include_epi && face_active) {
                for (int r = 0; r < m1; ++r) {
                    if (l1_state[r] == 0) {
                        push_op_row(diff, r);
                        rhs.push_back(0.0);
                        kind.push_back(0);
                        ref.push_back(r);
                        ++rows;
                    }
                }
                if (!cache_hit) {
                    Vector face = Vector::Zero(n);
                    for (int r = 0; r < m1; ++r) {
                        if (l1_state[r] != 0) {
                            for (int a = 0; a < diff.width(); ++a) {
                                face[r + a] += l1_state[r] * diff.band(r, a);
                            }
                        }
                    }
                    for (int i = 0; i < n; ++i) {
                        if (face[i] != 0.0) trips.emplace_back(rows, i, face[i]);
                    }
                    trips.emplace_back(rows, d - 1, -1.0);
                }
                rhs.push_back(0.0);
                kind.push_back(1);
                ref.push_back(-1);
                face_idx = rows;
                ++rows;
            }
            for (int r = 0; r < m2; ++r) {
                if (mono_active[r]) {
                    push_op_row(*mono_op, r);
                    rhs.push_back(0.0);
                    kind.push_back(2);
                    ref.push_back(r);
                    ++rows;
                }
            }
            for (int r = 0; r < m3; ++r) {
                if (curv_active[r]) {
                    push_op_row(*curv_op, r);
                    rhs.push_back(0.0);
                    kind.push_back(3);
                    ref.push_back(r);
                    ++rows;
                }
            }
            for (int i = 0; i < n; ++i) {
                if (lower_active[i]) {
                    if (!cache_hit) trips.emplace_back(rows, i, 1.0);
                    rhs.push_back((*shape.lower)[i]);
                    kind.push_back(4);
                    ref.push_back(i);
                    ++rows;
                } else if (upper_active[i]) {
                    if (!cache_hit) trips.emplace_back(rows, i, 1.0);
                    rhs.push_back((*shape.upper)[i]);
                    kind.push_back(5);
                    ref.push_back(i);
                    ++rows;
                }
            }

            Vector x = x0;
            Vector nu = Vector::Zero(std::max(rows, 1));
            if (rows > 0) {
                if (!cache_hit) {
                    cache.ready = false;
                    cache.E.resize(rows, d);
                    cache.E.setFromTriplets(trips.begin(), trips.end());
                    Eigen::SparseMatrix<double> gram =
                        (cache.E * Eigen::SparseMatrix<double>(cache.E.transpose())).pruned();
                    // tiny ridge guards against duplicated active rows (k = 1
                    // curvature rows are parallel to the difference rows)
                    for (int i = 0; i < rows; ++i) gram.coeffRef(i, i) += 1e-11;
                    cache.ldlt.compute(gram);
                    if (cache.ldlt.info() != Eigen::Success) { extern long dbg_reason[8]; ++dbg_reason[1]; return false; }
                }
                Vector r = cache.E * x0;
                for (int i = 0; i < rows; ++i) r[i] -= rhs[i];
                nu = cache.ldlt.solve(r);
                // refine against the unridged Gram: any exact solution gives
                // the same E^T nu, so the polished point does not depend on
                // which degenerate multiplier representation the ridge picked
                const double rscale = 1.0 + r.cwiseAbs().maxCoeff();
                for (int refine = 0; refine < 3; ++refine) {
                    const Vector resid = r - cache.E * Vector(cache.E.transpose() * nu);
                    if (resid.cwiseAbs().maxCoeff() < 1e-13 * rscale) break;
                    nu += cache.ldlt.solve(resid);
                }
                x = x0 - cache.E.transpose() * nu;
            } else {
                { extern long dbg_reason[8]; ++dbg_reason[5]; }
                return false;
            }
            const Vector eta_p = x.head(n);
            const double t_p = x[d - 1];

            // dual residuals drive the releases
            bool changed = false;
            const double mtol = 1e-6 * (1.0 + nu.cwiseAbs().maxCoeff());
            const double nu_face = face_idx >= 0 ? nu[face_idx] : 0.0;
            for (int i = 0; i < rows; ++i) {
                switch (kind[i]) {
                    case 0:
                        if (std::abs(nu[i]) > nu_face + mtol) {
                            l1_state[ref[i]] = nu[i] > 0.0 ? 1 : -1;
                            changed = true;
                        }
                        break;
                    case 1:
                        if (nu_face < -mtol) {
                            face_active = false;
                            changed = true;
                        }
                        break;
                    case 2:
                        if (mono_sgn * nu[i] > mtol) {
                            mono_active[ref[i]] = 0;
                            changed = true;
                        }
                        break;
                    case 3:
                        if (curv_sgn * nu[i] > mtol) {
                            curv_active[ref[i]] = 0;
                            changed = true;
                        }
                        break;
                    case 4:
                        if (nu[i] > mtol) {
                            lower_active[ref[i]] = 0;
                            changed = true;
                        }
                        break;
                    case 5:
                        if (nu[i] < -mtol) {
                            upper_active[ref[i]] = 0;
                            changed = true;
                        }
                        break;
                }
            }
            if (changed) continue;

            // primal violations: pin what the candidate breaks
            const double scale = 1.0 + x.cwiseAbs().maxCoeff();
            const double ftol = 1e-9 * scale;
            if (include_epi) {
                const Vector dv = diff.apply(eta_p);
                for (int r = 0; r < m1; ++r) {
                    if (l1_state[r] != 0 && dv[r] * l1_state[r] < -ftol) {
                        l1_state[r] = 0;  // crossed zero: pin to the kink
                        changed = true;
                    }
                }
                if (!changed && epi_violation(eta_p, t_p) > ftol) {
                    if (!face_active) {
                        face_active = true;
                        for (int r = 0; r < m1; ++r) {
                            l1_state[r] = dv[r] > ftol ? 1 : (dv[r] < -ftol ? -1 : 0);
                        }
                        changed = true;
                    } else {
                        { extern long dbg_reason[8]; ++dbg_reason[2]; }
                        return false;
                    }
                }
            }
            if (!changed && mono_op) {
                const Vector dv = mono_op->apply(eta_p);
                for (int r = 0; r < m2; ++r) {
                    if (!mono_active[r] && mono_sgn * dv[r] < -ftol) {
                        mono_active[r] = 1;
                        changed = true;
                    }
                }
            }
            if (!changed && curv_op) {
                const Vector dv = curv_op->apply(eta_p);
                for (int r = 0; r < m3; ++r) {
                    if (!curv_active[r] && curv_sgn * dv[r] < -ftol) {
                        curv_active[r] = 1;
                        changed = true;
                    }
                }
            }
            if (!changed && (shape.lower || shape.upper)) {
                for (int i = 0; i < n; ++i) {
                    if (shape.lower && !lower_active[i] && eta_p[i] < (*shape.lower)[i] - ftol) {
                        lower_active[i] = 1;
                        changed = true;
                    }
                    if (shape.upper && !upper_active[i] && eta_p[i] > (*shape.upper)[i] + ftol) {
                        upper_active[i] = 1;
                        changed = true;
                    }
                }
            }
            if (changed) continue;

            // certificate complete; remember the active system
            if (!cache_hit) {
                cache.include_epi = include_epi;
                cache.face_active = face_active;
                cache.l1_state = l1_state;
                cache.mono_active = mono_active;
                cache.curv_active = curv_active;
                cache.lower_active = lower_active;
                cache.upper_active = upper_active;
                cache.ready = true;
            }
            eta_out = eta_p;
            t_out = t_p;
            return true;
        }
        { extern long dbg_reason[8]; ++dbg_reason[0]; }
        return false;
    }

    Projection solve(const Vector& beta, double alpha, bool include_epi) {
        if (beta.size() != n) throw DimMismatch("shape projection: vector length != n");
        Projection out;
        const bool has_bounds = shape.lower || shape.upper;

        if (!include_epi && !shape.any()) {
            out.point = beta;
            out.alpha = alpha;
            return out;
        }
        const double viol = cone_violation(beta);
        const bool epi_ok = !include_epi || diff.penalty(beta) <= alpha;
        if (viol <= 0.0 && epi_ok) {
            out.point = beta;
            out.alpha = alpha;
            return out;
        }

        const bool trace = std::getenv("PROXTREND_TRACE") != nullptr;
        if (trace) std::fprintf(stderr, "[solve] cache=%d ready=%d\n", pcache.ptr != nullptr,
                                pcache.ptr ? (int)pcache.ptr->ready : -1);
        // fast path: the cached active set usually certifies the projection
        // outright, skipping the splitting iterations entirely
        if (pcache.ptr && pcache.ptr->ready && pcache.ptr->include_epi == include_epi) {
            Vector eta_p;
            double t_p = 0.0;
            const bool okfast = try_polish(beta, alpha, include_epi, false, eta_p, t_p);
            if (trace) std::fprintf(stderr, "[solve] fastpath ok=%d\n", (int)okfast);
            if (okfast) {
                out.point = std::move(eta_p);
                out.alpha = include_epi ? t_p : alpha;
                out.distance_sq = (out.point - beta).squaredNorm();
                if (include_epi) out.distance_sq += (out.alpha - alpha) * (out.alpha - alpha);
                out.iterations = 0;
                return out;
            }
        }

        const int m1 = diff.rows();
        if (!include_epi || !warm || z1.size() != m1) {
            z1 = include_epi ? diff.apply(beta) : Vector();
            u1 = Vector::Zero(z1.size());
            ztau = std::max(alpha, include_epi ? z1.lpNorm<1>() : 0.0);
            utau = 0.0;
            if (mono_op) {
                z2 = clamp_mono(mono_op->apply(beta));
                u2 = Vector::Zero(z2.size());
            }
            if (curv_op) {
                z3 = clamp_curv(curv_op->apply(beta));
                u3 = Vector::Zero(z3.size());
            }
            if (has_bounds) {
                z4 = clamp_bounds(beta);
                u4 = Vector::Zero(n);
            }
            rho = 1.0;
            factored_rho = -1.0;
        }

        BandedLLT* fac = &llt;
        BandedLLT local;
        if (!include_epi) fac = &local;  // cone solves never share the cached factorization
        double fac_rho = include_epi ? factored_rho : -1.0;

        const int sb = bandwidth(include_epi);
        const double relax = 1.7;
        const int max_iter = 20000;
        const double eps_abs = 1e-9;
        const double eps_rel = 1e-9;
        const double eps_loose = 1e-6;  // enough for active-set identification

        Vector eta = beta;
        double t = alpha;
        double pri = 0.0, dua = 0.0;
        bool converged = false;
        bool polished = false;
        int last_polish_attempt = -100;
        int it = 0;

        for (it = 1; it <= max_iter; ++it) {
            if (fac_rho != rho) {
                fac->factor(normal_bands(rho, include_epi), n, sb);
                fac_rho = rho;
                if (include_epi) factored_rho = rho;
            }

            Vector rhs = beta;
            if (include_epi) rhs += rho * diff.apply_transpose(z1 - u1);
            if (mono_op) rhs += rho * mono_op->apply_transpose(z2 - u2);
            if (curv_op) rhs += rho * curv_op->apply_transpose(z3 - u3);
            if (has_bounds) rhs += rho * (z4 - u4);
            eta = rhs;
            fac->solve_inplace(eta);
            if (include_epi) t = (alpha + rho * (ztau - utau)) / (1.0 + rho);

            const Vector a1 = include_epi ? diff.apply(eta) : Vector();
            const Vector a2 = mono_op ? mono_op->apply(eta) : Vector();
            const Vector a3 = curv_op ? curv_op->apply(eta) : Vector();

            const Vector z1_old = z1, z2_old = z2, z3_old = z3, z4_old = z4;
            const double ztau_old = ztau;

            double pri_sq = 0.0, ax_sq = 0.0, z_sq = 0.0;
            if (include_epi) {
                const Vector h1 = relax * a1 + (1.0 - relax) * z1;
                const double htau = relax * t + (1.0 - relax) * ztau;
                const Projection pz = project_epi_l1(h1 + u1, htau + utau);
                z1 = pz.point;
                ztau = pz.alpha;
                u1 += h1 - z1;
                utau += htau - ztau;
                pri_sq += (a1 - z1).squaredNorm() + (t - ztau) * (t - ztau);
                ax_sq += a1.squaredNorm() + t * t;
                z_sq += z1.squaredNorm() + ztau * ztau;
            }
            if (mono_op) {
                const Vector h2 = relax * a2 + (1.0 - relax) * z2;
                z2 = clamp_mono(h2 + u2);
                u2 += h2 - z2;
                pri_sq += (a2 - z2).squaredNorm();
                ax_sq += a2.squaredNorm();
                z_sq += z2.squaredNorm();
            }
            if (curv_op) {
                const Vector h3 = relax * a3 + (1.0 - relax) * z3;
                z3 = clamp_curv(h3 + u3);
                u3 += h3 - z3;
                pri_sq += (a3 - z3).squaredNorm();
                ax_sq += a3.squaredNorm();
                z_sq += z3.squaredNorm();
            }
            if (has_bounds) {
                const Vector h4 = relax * eta + (1.0 - relax) * z4;
                z4 = clamp_bounds(h4 + u4);
                u4 += h4 - z4;
                pri_sq += (eta - z4).squaredNorm();
                ax_sq += eta.squaredNorm();
                z_sq += z4.squaredNorm();
            }

            Vector dvec = Vector::Zero(n);
            if (include_epi) dvec += diff.apply_transpose(z1 - z1_old);
            if (mono_op) dvec += mono_op->apply_transpose(z2 - z2_old);
            if (curv_op) dvec += curv_op->apply_transpose(z3 - z3_old);
            if (has_bounds) dvec += z4 - z4_old;
            double dua_sq = rho * rho * dvec.squaredNorm();
            if (include_epi) dua_sq += rho * rho * (ztau - ztau_old) * (ztau - ztau_old);

            pri = std::sqrt(pri_sq);
            dua = std::sqrt(dua_sq);
            const double eps_pri = eps_abs * std::sqrt(static_cast<double>(n + 2)) +
                                   eps_rel * std::sqrt(std::max(ax_sq, z_sq));
            const double eps_dua = eps_abs * std::sqrt(static_cast<double>(n + 1)) + eps_rel * rho;
            const double scale_loose = eps_loose / eps_abs;
            const bool loose_ok = pri <= scale_loose * eps_pri && dua <= scale_loose * eps_dua;
            if ((loose_ok && it - last_polish_attempt >= 10) || it == 1) {
                last_polish_attempt = it;
                Vector eta_p;
                double t_p = 0.0;
                const bool okloop = try_polish(beta, alpha, include_epi, true, eta_p, t_p);
                if (trace) std::fprintf(stderr, "[solve] it=%d loop polish ok=%d pri=%g dua=%g\n", it, (int)okloop, pri, dua);
                if (okloop) {
                    eta = std::move(eta_p);
                    t = t_p;
                    converged = true;
                    polished = true;
                    break;
                }
            }
            if (pri <= eps_pri && dua <= eps_dua) {
                if (trace) std::fprintf(stderr, "[solve] tight converged it=%d\n", it);
                converged = true;
                break;
            }

            if (it % 25 == 0) {
                if (pri > 10.0 * dua && rho < 1e6) {
                    rho *= 2.0;
                    u1 *= 0.5;
                    utau *= 0.5;
                    u2 *= 0.5;
                    u3 *= 0.5;
                    u4 *= 0.5;
                } else if (dua > 10.0 * pri && rho > 1e-6) {
                    rho *= 0.5;
                    u1 *= 2.0;
                    utau *= 2.0;
                    u2 *= 2.0;
                    u3 *= 2.0;
                    u4 *= 2.0;
                }
            }
        }

        if (!converged) {
            std::ostringstream msg;
            msg << "shape projection did not converge in " << max_iter
                << " iterations (primal residual " << pri << ", dual residual " << dua << ")";
            throw ConvergenceError(msg.str());
        }
        if (!polished) {
            Vector eta_p;
            double t_p = 0.0;
            if (try_polish(beta, alpha, include_epi, true, eta_p, t_p)) {
                eta = std::move(eta_p);
                t = t_p;
            } else {
                extern long dbg_reason[8];
                ++dbg_reason[3];
            }
        }
        if (include_epi) warm = true;

        out.point = std::move(eta);
        out.alpha = include_epi ? t : alpha;
        out.distance_sq = (out.point - beta).squaredNorm();
        if (include_epi) out.distance_sq += (out.alpha - alpha) * (out.alpha - alpha);
        out.iterations = it;
        return out;
    }
};

ShapeProjector::ShapeProjector(const DiffOperator& diff, ShapeSpec shape)
    : impl_(std::make_unique<Impl>(diff, shape)), shape_(std::move(shape)) {}

ShapeProjector::ShapeProjector(const ShapeProjector& other)
    : impl_(std::make_unique<Impl>(*other.impl_)), shape_(other.shape_) {}

ShapeProjector::~ShapeProjector() = default;

Projection ShapeProjector::project(const Vector& beta, double alpha) {
    return impl_->solve(beta, alpha, true);
}

Vector ShapeProjector::project_cone(const Vector& beta) {
    return impl_->solve(beta, 0.0, false).point;
}

void ShapeProjector::reset() { impl_->warm = false; }

Projection project_shape_restricted(const Vector& beta, double alpha, const DiffOperator& diff,
                                    const ShapeSpec& shape) {
    ShapeProjector projector(diff, shape);
    return projector.project(beta, alpha);
}

}  // namespace proxtrend
