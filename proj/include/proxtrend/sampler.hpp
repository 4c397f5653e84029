#ifndef PROXTREND_SAMPLER_HPP
#define PROXTREND_SAMPLER_HPP

#include <cstdint>
#include <vector>

#include "proxtrend/linalg.hpp"
#include "proxtrend/target.hpp"

namespace proxtrend {

struct SamplerConfig {
    int n_warmup = 1000;
    int n_draws = 3000;
    int n_chains = 4;
    double target_accept = 0.8;
    int max_tree_depth = 10;
    std::uint64_t seed = 0;
    double init_jitter = 0.0;  // s.d. of per-chain additive jitter on the initial position
    int max_threads = 0;       // 0: hardware limit, capped by PROXTREND_THREADS

    void validate() const;
};

struct ChainResult {
    Matrix draws;       // n_draws x dim in the transformed (sampling) space
    Matrix draws_beta;  // n_draws x n mapped to beta-space; filled by the fit pipeline
    double accept_mean = 0.0;
    int divergences = 0;  // post-warmup divergent transitions
    double step_size = 0.0;
    Vector metric;  // adapted diagonal inverse mass (variance estimates)
    double median_abs_energy_error = 0.0;
    Vector rhat;  // per-coordinate split R-hat (set when >= 2 chains were run)
    Vector ess;   // per-coordinate rank-normalized effective sample size
};

struct DiagnosticsReport {
    Vector rhat;
    Vector ess;
    std::vector<int> flagged;  // coordinates with rhat > 1.05
    int total_divergences = 0;
    double accept_mean = 0.0;
};

/// Runs `config.n_chains` independent NUTS chains on the target from `init`
/// (jittered per chain), adapting step size by dual averaging and a diagonal
/// metric over expanding warmup windows. Deterministic given the seed.
std::vector<ChainResult> sample(const TargetDensity& target, const Vector& init,
                                const SamplerConfig& config);

/// Split R-hat and rank-normalized ESS per coordinate across chains.
DiagnosticsReport diagnostics(const std::vector<ChainResult>& chains);

/// Inverse standard normal CDF (rational approximation, |rel err| < 2e-9).
double standard_normal_quantile(double p);

}  // namespace proxtrend

#endif  // PROXTREND_SAMPLER_HPP
