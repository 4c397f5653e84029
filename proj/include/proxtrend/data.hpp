#ifndef PROXTREND_DATA_HPP
#define PROXTREND_DATA_HPP

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "proxtrend/linalg.hpp"

namespace proxtrend {

/// Observed series in sufficient-statistic form: per-location means, counts,
/// and the within-location sum of squares. raw retains the original pairs so
/// data can be re-thinned.
struct TrendData {
    std::vector<double> grid;  // strictly increasing distinct locations
    Vector ybar;               // per-location means
    Eigen::VectorXi weights;   // per-location observation counts
    double sse = 0.0;          // sum_i sum_j (y_ij - ybar_i)^2
    long m = 0;                // total observation count
    std::optional<std::vector<std::pair<double, double>>> raw;

    int n() const { return static_cast<int>(grid.size()); }
    Vector grid_vector() const;
    Vector weights_real() const { return weights.cast<double>(); }

    /// Pooled sample variance of all observations (denominator m-1).
    double var_y() const;
};

/// Groups exactly-equal x values and computes the vectorized statistics.
/// Input order does not matter; the result is in sorted canonical form.
TrendData aggregate(const std::vector<std::pair<double, double>>& points);

/// Expands a TrendData back to (x, y) pairs (from raw when present,
/// otherwise ybar replicated by weight — exact when sse = 0).
std::vector<std::pair<double, double>> flatten(const TrendData& data);

struct ThinningResult {
    TrendData data;
    double interval_width = 0.0;
    std::vector<int> mapping;  // original location index -> merged index
};

/// Merges grid locations falling in the same equal-width bin into their
/// weight-weighted average location; observations are re-attached to the
/// merged locations. Bins are left-closed/right-open except the last.
/// n_bins >= distinct-location count returns the data unchanged.
ThinningResult thin(const TrendData& data, int n_bins);

enum class TrendKind {
    piecewise_linear,
    smooth_trend,
    sinusoid,
    piecewise_quad_cubic,
    inc_sinusoid,
    convex_linear,
    truncated_cubic,
    logarithm
};

TrendKind trend_from_name(const std::string& name);
std::string trend_name(TrendKind kind);

/// True for the low-amplitude trends defined on [0, 10] (the candidates for
/// shape-restricted fits); the remaining trends live on [0, 100].
bool is_shape_trend(TrendKind kind);

/// Evaluates the named trend on the grid. piecewise_quad_cubic is scaled so
/// its values on {1..100} have sample standard deviation 9; smooth_trend
/// interpolates a fixed stored realization.
Vector generate_trend(TrendKind kind, const Vector& grid);

/// Piecewise-linear interpolation through explicit knots, extrapolating with
/// the end segments. The default knot list used by generate_trend is
/// (0,0), (35,35), (70,0), (100,15).
Vector piecewise_linear_trend(const Vector& grid, const std::vector<std::pair<double, double>>& knots);

/// Canonical evaluation grid for a trend family: {1..n} for the [0,100]
/// trends, n evenly spaced points ending at 10 for the shape trends.
Vector default_grid(TrendKind kind, int n);

/// Sorted uniform-random grid over the trend's canonical domain.
Vector uniform_random_grid(TrendKind kind, int n, std::uint64_t seed);

/// One Gaussian observation per grid point, deterministic per seed.
TrendData simulate(const Vector& grid, const Vector& trend, double sigma, std::uint64_t seed);

/// Two-column x,y CSV; header optional.
TrendData load_csv(std::istream& in);
TrendData load_csv_file(const std::string& path);
void save_csv(std::ostream& out, const TrendData& data);
void save_csv_file(const std::string& path, const TrendData& data);

}  // namespace proxtrend

#endif  // PROXTREND_DATA_HPP
