#include "proxtrend/stats.hpp"

#include <algorithm>
#include <cmath>

#include "proxtrend/errors.hpp"

namespace proxtrend {

double quantile(std::vector<double> values, double p) {
    if (values.empty()) throw EmptyChains("quantile: no values");
    std::sort(values.begin(), values.end());
    const double h = (static_cast<double>(values.size()) - 1.0) * p;
    const std::size_t lo = static_cast<std::size_t>(std::floor(h));
    if (lo + 1 >= values.size()) return values.back();
    return values[lo] + (h - static_cast<double>(lo)) * (values[lo + 1] - values[lo]);
}

namespace {

std::array<double, 3> triple(std::vector<double>& values) {
    return {quantile(values, 0.5), quantile(values, 0.025), quantile(values, 0.975)};
}

}  // namespace

FitSummary summarize(const std::vector<ChainResult>& chains) {
    if (chains.empty()) throw EmptyChains("summarize: no chains");
    long total = 0;
    for (const auto& chain : chains) total += chain.draws.rows();
    if (total == 0) throw EmptyChains("summarize: no draws");

    const bool have_beta = chains[0].draws_beta.size() > 0;
    const Eigen::Index n =
        have_beta ? chains[0].draws_beta.cols() : std::max<Eigen::Index>(chains[0].draws.cols() - 2, 0);

    FitSummary out;
    out.median.resize(n);
    out.q025.resize(n);
    out.q975.resize(n);
    std::vector<double> col;
    col.reserve(static_cast<std::size_t>(total));
    for (Eigen::Index d = 0; d < n; ++d) {
        col.clear();
        for (const auto& chain : chains) {
            const auto& src = have_beta ? chain.draws_beta : chain.draws;
            for (Eigen::Index i = 0; i < src.rows(); ++i) col.push_back(src(i, d));
        }
        out.median[d] = quantile(col, 0.5);
        out.q025[d] = quantile(col, 0.025);
        out.q975[d] = quantile(col, 0.975);
    }

    const Eigen::Index dim = chains[0].draws.cols();
    if (dim >= 2) {
        std::vector<double> sig, alp;
        sig.reserve(static_cast<std::size_t>(total));
        alp.reserve(static_cast<std::size_t>(total));
        for (const auto& chain : chains) {
            for (Eigen::Index i = 0; i < chain.draws.rows(); ++i) {
                sig.push_back(std::exp(chain.draws(i, dim - 2)));
                alp.push_back(std::exp(chain.draws(i, dim - 1)));
            }
        }
        out.sigma2_summary = triple(sig);
        out.alpha_summary = triple(alp);
    }
    return out;
}

Metrics evaluate(const FitSummary& summary, const Vector& truth) {
    if (summary.median.size() != truth.size()) throw DimMismatch("evaluate: length mismatch");
    const Eigen::Index n = truth.size();
    Metrics out;
    for (Eigen::Index i = 0; i < n; ++i) {
        out.mad += std::abs(summary.median[i] - truth[i]);
        out.cp += (summary.q025[i] <= truth[i] && truth[i] <= summary.q975[i]) ? 1.0 : 0.0;
        out.mciw += summary.q975[i] - summary.q025[i];
    }
    out.mad /= static_cast<double>(n);
    out.cp /= static_cast<double>(n);
    out.mciw /= static_cast<double>(n);
    return out;
}

}  // namespace proxtrend
