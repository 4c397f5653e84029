#ifndef PROXTREND_STATS_HPP
#define PROXTREND_STATS_HPP

#include <array>
#include <vector>

#include "proxtrend/linalg.hpp"
#include "proxtrend/sampler.hpp"

namespace proxtrend {

/// Posterior summary of a fit: per-coordinate median and central 95%
/// interval of beta, plus (median, q025, q975) triples for sigma^2 and
/// alpha. Quantiles use linear interpolation between order statistics.
struct FitSummary {
    Vector median;
    Vector q025;
    Vector q975;
    std::array<double, 3> sigma2_summary{0.0, 0.0, 0.0};  // median, q025, q975
    std::array<double, 3> alpha_summary{0.0, 0.0, 0.0};
    double tcpu_seconds = 0.0;
};

/// Empirical quantile of (a copy of) the values, linear interpolation
/// between order statistics: h = (N-1)p.
double quantile(std::vector<double> values, double p);

/// Pools draws_beta (and the trailing log sigma^2 / log alpha columns of
/// draws) across chains into a FitSummary.
FitSummary summarize(const std::vector<ChainResult>& chains);

struct Metrics {
    double mad = 0.0;
    double cp = 0.0;
    double mciw = 0.0;
};

/// MAD / CP / MCIW of the summary against the true trend.
Metrics evaluate(const FitSummary& summary, const Vector& truth);

}  // namespace proxtrend

#endif  // PROXTREND_STATS_HPP
