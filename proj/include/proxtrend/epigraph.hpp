#ifndef PROXTREND_EPIGRAPH_HPP
#define PROXTREND_EPIGRAPH_HPP

#include <memory>
#include <optional>

#include "proxtrend/linalg.hpp"
#include "proxtrend/prox.hpp"

namespace proxtrend {

enum class EpigraphKind { L1, TV1D, ShapeRestricted };

enum class Monotone { none, increasing, decreasing };
enum class Curvature { none, convex, concave };

/// Shape restriction on beta: any combination of a monotonicity direction,
/// a curvature direction and optional per-coordinate bounds.
struct ShapeSpec {
    Monotone monotone = Monotone::none;
    Curvature curvature = Curvature::none;
    std::optional<Vector> lower;
    std::optional<Vector> upper;

    bool any() const {
        return monotone != Monotone::none || curvature != Curvature::none ||
               lower.has_value() || upper.has_value();
    }
};

/// Which slice of the sampler position a constraint reads.
struct EpigraphSpec {
    EpigraphKind kind = EpigraphKind::L1;
    int active_begin = 0;  // 0-based, half-open [begin, end)
    int active_end = 0;
    std::optional<ShapeSpec> shape;
};

struct Projection {
    Vector point;
    double alpha = 0.0;
    double distance_sq = 0.0;
    int iterations = 0;
};

/// Euclidean projection of (theta_slice, alpha) onto {(v, t) : ||v||_1 <= t}.
/// Identity for feasible inputs; otherwise bisection on
/// F(lambda) = ||soft_threshold(theta, lambda)||_1 - lambda - alpha over
/// (0, lambda_max], lambda_max = max(||theta||_inf, -alpha).
Projection project_epi_l1(const Vector& theta_slice, double alpha);

/// Euclidean projection onto {(v, t) : ||D1 v||_1 <= t}. cached_pseudosolve
/// is the precomputed [D1 D1^T]^{-1} D1 whose image's sup-norm bounds the
/// bisection interval.
Projection project_epi_tv(const Vector& theta_slice, double alpha, const Matrix& cached_pseudosolve);

/// Euclidean projection of (beta, alpha) onto
///   S = { ||D^(k+1) beta||_1 <= alpha } intersected with the selected
///       sign cones (monotonicity via D1, curvature via the grid-adjusted
///       second difference) and bounds.
/// Solved by an operator-splitting QP on the lifted formulation; the
/// projector keeps its factorization and duals warm across nearby calls.
class ShapeProjector {
public:
    ShapeProjector(const DiffOperator& diff, ShapeSpec shape);
    ShapeProjector(const ShapeProjector&);
    ShapeProjector& operator=(const ShapeProjector&) = delete;
    ~ShapeProjector();

    /// Projection onto S. Throws ConvergenceError when the iteration cap is
    /// exceeded with the residuals attached to the message.
    Projection project(const Vector& beta, double alpha);

    /// Projection onto the shape cone alone (the l1 block disabled); used to
    /// repair infeasible initial states.
    Vector project_cone(const Vector& beta);

    const ShapeSpec& shape() const { return shape_; }

    /// Drops warm-start state; subsequent calls solve from scratch.
    void reset();

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
    ShapeSpec shape_;
};

/// Stateless convenience wrapper around ShapeProjector.
Projection project_shape_restricted(const Vector& beta, double alpha, const DiffOperator& diff,
                                    const ShapeSpec& shape);

}  // namespace proxtrend

#endif  // PROXTREND_EPIGRAPH_HPP
