#ifndef PROXTREND_FIT_HPP
#define PROXTREND_FIT_HPP

#include <optional>

#include "proxtrend/data.hpp"
#include "proxtrend/posterior.hpp"
#include "proxtrend/sampler.hpp"
#include "proxtrend/stats.hpp"

namespace proxtrend {

/// End-to-end fit driver shared by the CLI and the acceptance suite:
/// optional thinning, spec resolution, PBSRTF rescaling, sampling, and the
/// mapping of draws back to beta-space in original units.
struct FitConfig {
    ModelSpec model;
    SamplerConfig sampler;
    std::optional<int> thin_bins;
};

struct FitResult {
    TrendData fitted_data;  // data the model was fit on (post-thinning, original units)
    std::optional<ThinningResult> thinning;
    ModelSpec resolved;  // hyperparameters actually used (sampling scale)
    Rescale rescale;     // identity for PBTF
    std::vector<ChainResult> chains;
    FitSummary summary;  // beta and sigma^2 in original units; alpha in sampling units
    DiagnosticsReport diag;
    double tcpu_seconds = 0.0;
};

FitResult fit_model(const TrendData& data, const FitConfig& config);

/// Linear interpolation of a fitted summary onto other grid locations.
FitSummary interpolate_summary(const FitSummary& summary, const std::vector<double>& fitted_grid,
                               const std::vector<double>& target_grid);

}  // namespace proxtrend

#endif  // PROXTREND_FIT_HPP
