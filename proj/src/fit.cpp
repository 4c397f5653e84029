#include "proxtrend/fit.hpp"

#include <chrono>
#include <cmath>

namespace proxtrend {

FitResult fit_model(const TrendData& data, const FitConfig& config) {
    FitResult out;
    if (config.thin_bins) {
        out.thinning = thin(data, *config.thin_bins);
        out.fitted_data = out.thinning->data;
    } else {
        out.fitted_data = data;
    }

    const bool pbsrtf = config.model.model == Model::PBSRTF;
    TrendData sampling_data = out.fitted_data;
    if (pbsrtf) {
        out.rescale = Rescale::fit(out.fitted_data);
        sampling_data = out.rescale.apply(out.fitted_data);
    }

    out.resolved = config.model.resolve(sampling_data);
    const ParamState init = initialize(sampling_data, out.resolved);
    auto posterior = make_posterior(sampling_data, out.resolved);

    SamplerConfig scfg = config.sampler;
    if (scfg.init_jitter < 0.0) scfg.init_jitter = 0.0;

    const auto t0 = std::chrono::steady_clock::now();
    out.chains = sample(*posterior, SurrogatePosterior::pack(init), scfg);
    const auto t1 = std::chrono::steady_clock::now();
    out.tcpu_seconds = std::chrono::duration<double>(t1 - t0).count();

    // map draws to beta space, in original units
    const int n = sampling_data.n();
    if (out.resolved.model == Model::PBTF) {
        ReparamMatrix reparam(sampling_data.grid, out.resolved.k, *out.resolved.reparam);
        for (auto& chain : out.chains) {
            chain.draws_beta.resize(chain.draws.rows(), n);
            Vector theta(n);
            for (Eigen::Index i = 0; i < chain.draws.rows(); ++i) {
                theta = chain.draws.row(i).head(n).transpose();
                chain.draws_beta.row(i) = reparam.forward_solve(theta).transpose();
            }
        }
    } else {
        for (auto& chain : out.chains) {
            chain.draws_beta = chain.draws.leftCols(n);
            if (!out.rescale.identity()) {
                chain.draws_beta =
                    (chain.draws_beta.array() / out.rescale.y_scale + out.rescale.y_off).matrix();
            }
        }
    }

    out.summary = summarize(out.chains);
    if (pbsrtf && !out.rescale.identity()) {
        for (auto& v : out.summary.sigma2_summary) v = out.rescale.sigma2_to_original(v);
    }
    out.summary.tcpu_seconds = out.tcpu_seconds;
    if (out.chains.size() >= 2) {
        out.diag = diagnostics(out.chains);
    } else {
        out.diag.total_divergences = out.chains.empty() ? 0 : out.chains[0].divergences;
        out.diag.accept_mean = out.chains.empty() ? 0.0 : out.chains[0].accept_mean;
    }
    return out;
}

namespace {

double interp(const std::vector<double>& xs, const Vector& ys, double x) {
    if (x <= xs.front()) return ys[0];
    if (x >= xs.back()) return ys[ys.size() - 1];
    std::size_t lo = 0, hi = xs.size() - 1;
    while (hi - lo > 1) {
        const std::size_t mid = (lo + hi) / 2;
        (xs[mid] <= x ? lo : hi) = mid;
    }
    const double f = (x - xs[lo]) / (xs[hi] - xs[lo]);
    return ys[static_cast<Eigen::Index>(lo)] +
           f * (ys[static_cast<Eigen::Index>(hi)] - ys[static_cast<Eigen::Index>(lo)]);
}

}  // namespace

FitSummary interpolate_summary(const FitSummary& summary, const std::vector<double>& fitted_grid,
                               const std::vector<double>& target_grid) {
    if (static_cast<Eigen::Index>(fitted_grid.size()) != summary.median.size()) {
        throw DimMismatch("interpolate_summary: grid/summary length mismatch");
    }
    FitSummary out = summary;
    const Eigen::Index nt = static_cast<Eigen::Index>(target_grid.size());
    out.median.resize(nt);
    out.q025.resize(nt);
    out.q975.resize(nt);
    for (Eigen::Index i = 0; i < nt; ++i) {
        out.median[i] = interp(fitted_grid, summary.median, target_grid[i]);
        out.q025[i] = interp(fitted_grid, summary.q025, target_grid[i]);
        out.q975[i] = interp(fitted_grid, summary.q975, target_grid[i]);
    }
    return out;
}

}  // namespace proxtrend
