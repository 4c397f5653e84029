#include "proxtrend/sampler.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <limits>
#include <numeric>
#include <thread>

#include "proxtrend/errors.hpp"
#include "proxtrend/rng.hpp"

namespace proxtrend {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kMaxDeltaH = 1000.0;  // divergence threshold on the energy error

double log_sum_exp(double a, double b) {
    if (a == -kInf) return b;
    if (b == -kInf) return a;
    const double m = std::max(a, b);
    return m + std::log(std::exp(a - m) + std::exp(b - m));
}

struct PointState {
    Vector q;
    Vector p;
    Vector grad;
    double logp = -kInf;
};

// Nesterov dual averaging on log step size (Hoffman & Gelman defaults).
class DualAverage {
public:
    void restart(double eps, double target) {
        mu_ = std::log(10.0 * eps);
        log_eps_ = std::log(eps);
        log_eps_bar_ = 0.0;
        h_bar_ = 0.0;
        m_ = 0;
        target_ = target;
    }
    void update(double accept) {
        ++m_;
        const double eta = 1.0 / (m_ + t0_);
        h_bar_ = (1.0 - eta) * h_bar_ + eta * (target_ - accept);
        log_eps_ = mu_ - std::sqrt(static_cast<double>(m_)) / gamma_ * h_bar_;
        const double w = std::pow(static_cast<double>(m_), -kappa_);
        log_eps_bar_ = w * log_eps_ + (1.0 - w) * log_eps_bar_;
    }
    double current() const { return std::exp(log_eps_); }
    double averaged() const { return std::exp(log_eps_bar_); }

private:
    double mu_ = 0.0, log_eps_ = 0.0, log_eps_bar_ = 0.0, h_bar_ = 0.0, target_ = 0.8;
    long m_ = 0;
    static constexpr double gamma_ = 0.05, t0_ = 10.0, kappa_ = 0.75;
};

struct Welford {
    long n = 0;
    Vector mean, m2;
    void reset(int dim) {
        n = 0;
        mean = Vector::Zero(dim);
        m2 = Vector::Zero(dim);
    }
    void add(const Vector& x) {
        ++n;
        const Vector delta = x - mean;
        mean += delta / static_cast<double>(n);
        m2 += delta.cwiseProduct(x - mean);
    }
    Vector variance() const {
        return n > 1 ? Vector(m2 / static_cast<double>(n - 1)) : Vector(Vector::Ones(mean.size()));
    }
};

struct TreeStats {
    double sum_metro = 0.0;
    long n_leapfrog = 0;
    bool divergent = false;
};

struct Proposal {
    Vector q, grad;
    double logp = -kInf;
    double h = kInf;
};

class NutsWorker {
public:
    NutsWorker(TargetDensity& target, Rng rng, const SamplerConfig& cfg)
        : target_(target), rng_(rng), cfg_(cfg), dim_(target.dim()) {
        inv_metric_ = Vector::Ones(dim_);
    }

    void run(const Vector& init, ChainResult& out) {
        PointState z;
        z.q = init;
        Evaluation e = target_.eval(z.q);  // initialization errors propagate
        z.logp = e.value;
        z.grad = std::move(e.grad);
        if (!std::isfinite(z.logp) || !z.grad.allFinite()) {
            throw NonFiniteDensity("sampler: non-finite density at the initial state");
        }
        z.p = Vector::Zero(dim_);

        warmup(z);

        out.draws.resize(cfg_.n_draws, dim_);
        out.divergences = 0;
        double metro_sum = 0.0;
        std::vector<double> abs_denergy;
        abs_denergy.reserve(cfg_.n_draws);
        for (int it = 0; it < cfg_.n_draws; ++it) {
            const Transition tr = transition(z);
            out.draws.row(it) = z.q.transpose();
            if (tr.divergent) ++out.divergences;
            metro_sum += tr.accept_stat;
            abs_denergy.push_back(std::abs(tr.energy_error));
        }
        out.accept_mean = cfg_.n_draws > 0 ? metro_sum / cfg_.n_draws : 0.0;
        out.step_size = step_;
        out.metric = inv_metric_;
        if (!abs_denergy.empty()) {
            auto mid = abs_denergy.begin() + abs_denergy.size() / 2;
            std::nth_element(abs_denergy.begin(), mid, abs_denergy.end());
            out.median_abs_energy_error = *mid;
        }
    }

private:
    struct Transition {
        double accept_stat = 0.0;
        double energy_error = 0.0;
        bool divergent = false;
    };

    double kinetic(const Vector& p) const { return 0.5 * p.dot(inv_metric_.cwiseProduct(p)); }

    // One leapfrog step; evaluation failures mark the point non-finite.
    void leapfrog(PointState& z, double eps) {
        z.p += 0.5 * eps * z.grad;
        z.q += eps * inv_metric_.cwiseProduct(z.p);
        try {
            Evaluation e = target_.eval(z.q);
            z.logp = e.value;
            z.grad = std::move(e.grad);
            if (!z.grad.allFinite()) z.logp = -kInf;
        } catch (const Error&) {
            z.logp = -kInf;
            z.grad.setZero();
        }
        z.p += 0.5 * eps * z.grad;
    }

    Vector sample_momentum() {
        Vector p(dim_);
        for (int i = 0; i < dim_; ++i) p[i] = rng_.normal() / std::sqrt(inv_metric_[i]);
        return p;
    }

    bool criterion(const Vector& ps_beg, const Vector& ps_end, const Vector& rho) const {
        return ps_beg.dot(rho) > 0.0 && ps_end.dot(rho) > 0.0;
    }

    // Grows the trajectory end `z` by 2^depth leapfrog steps in direction
    // sign(eps); multinomial proposal within the subtree; returns false on
    // divergence or an internal U-turn.
    bool build_tree(int depth, PointState& z, Vector& rho, Vector& ps_beg, Vector& ps_end,
                    double& log_sum_weight, Proposal& prop, double h0, double eps,
                    TreeStats& stats) {
        if (depth == 0) {
            leapfrog(z, eps);
            ++stats.n_leapfrog;
            double h = std::isfinite(z.logp) ? -z.logp + kinetic(z.p) : kInf;
            if (!std::isfinite(h)) h = kInf;
            const double dh = h - h0;
            stats.sum_metro += dh < 0.0 ? 1.0 : std::exp(-dh);
            if (dh > kMaxDeltaH) {
                stats.divergent = true;
                return false;
            }
            log_sum_weight = -dh;
            prop.q = z.q;
            prop.grad = z.grad;
            prop.logp = z.logp;
            prop.h = h;
            rho += z.p;
            ps_beg = inv_metric_.cwiseProduct(z.p);
            ps_end = ps_beg;
            return true;
        }
        double lsw1 = -kInf, lsw2 = -kInf;
        Proposal prop2;
        Vector rho1 = Vector::Zero(dim_), rho2 = Vector::Zero(dim_);
        Vector ps_mid_end(dim_), ps_mid_beg(dim_);
        if (!build_tree(depth - 1, z, rho1, ps_beg, ps_mid_end, lsw1, prop, h0, eps, stats)) {
            return false;
        }
        if (!build_tree(depth - 1, z, rho2, ps_mid_beg, ps_end, lsw2, prop2, h0, eps, stats)) {
            return false;
        }
        log_sum_weight = log_sum_exp(lsw1, lsw2);
        if (rng_.uniform() < std::exp(lsw2 - log_sum_weight)) prop = std::move(prop2);
        rho = rho1 + rho2;
        return criterion(ps_beg, ps_end, rho);
    }

    Transition transition(PointState& z) {
        Transition tr;
        z.p = sample_momentum();
        const double h0 = -z.logp + kinetic(z.p);

        PointState fwd = z, bwd = z;
        Vector rho = z.p;
        Vector ps_fwd = inv_metric_.cwiseProduct(z.p);
        Vector ps_bwd = ps_fwd;

        Proposal sample;
        sample.q = z.q;
        sample.grad = z.grad;
        sample.logp = z.logp;
        sample.h = h0;
        double lsw = 0.0;
        TreeStats stats;

        for (int depth = 0; depth < cfg_.max_tree_depth; ++depth) {
            const double dir = rng_.uniform() < 0.5 ? -1.0 : 1.0;
            double lsw_sub = -kInf;
            Proposal prop;
            Vector rho_sub = Vector::Zero(dim_);
            Vector ps_dummy(dim_);
            bool valid;
            if (dir > 0) {
                valid = build_tree(depth, fwd, rho_sub, ps_dummy, ps_fwd, lsw_sub, prop, h0,
                                   dir * step_, stats);
            } else {
                valid = build_tree(depth, bwd, rho_sub, ps_dummy, ps_bwd, lsw_sub, prop, h0,
                                   dir * step_, stats);
            }
            if (!valid) {
                tr.divergent = stats.divergent;
                break;
            }
            // biased progressive sampling toward the new subtree
            if (lsw_sub > lsw || rng_.uniform() < std::exp(lsw_sub - lsw)) {
                sample = std::move(prop);
            }
            lsw = log_sum_exp(lsw, lsw_sub);
            rho += rho_sub;
            if (!criterion(ps_bwd, ps_fwd, rho)) break;
        }

        z.q = std::move(sample.q);
        z.grad = std::move(sample.grad);
        z.logp = sample.logp;
        tr.accept_stat = stats.n_leapfrog > 0 ? stats.sum_metro / stats.n_leapfrog : 0.0;
        tr.energy_error = std::isfinite(sample.h) ? sample.h - h0 : kMaxDeltaH;
        return tr;
    }

    // Doubles or halves until one leapfrog step crosses 50% acceptance.
    double find_initial_step(const PointState& z0) {
        double eps = 1.0;
        const Vector p0 = sample_momentum();
        auto delta_h = [&](double e) {
            PointState z = z0;
            z.p = p0;
            const double h0 = -z.logp + kinetic(z.p);
            leapfrog(z, e);
            const double h = std::isfinite(z.logp) ? -z.logp + kinetic(z.p) : kInf;
            return h0 - h;  // log acceptance
        };
        double dh = delta_h(eps);
        const double dir = dh > std::log(0.5) ? 1.0 : -1.0;
        for (int i = 0; i < 60; ++i) {
            if (dir > 0 && !(dh > std::log(0.5))) break;
            if (dir < 0 && !(dh < std::log(0.5))) break;
            eps *= dir > 0 ? 2.0 : 0.5;
            if (eps > 1e7 || eps < 1e-10) break;
            dh = delta_h(eps);
        }
        return std::clamp(eps, 1e-10, 1e7);
    }

    void warmup(PointState& z) {
        const int w = cfg_.n_warmup;
        step_ = find_initial_step(z);
        DualAverage da;
        da.restart(step_, cfg_.target_accept);

        int init_buffer = 75, term_buffer = 50, base_window = 25;
        bool adapt_metric = w >= init_buffer + term_buffer + base_window;
        if (!adapt_metric && w >= 20) {
            init_buffer = static_cast<int>(0.15 * w);
            term_buffer = static_cast<int>(0.10 * w);
            base_window = w - init_buffer - term_buffer;
            adapt_metric = base_window > 10;
        }

        Welford acc;
        acc.reset(dim_);
        int window_size = base_window;
        int window_end = adapt_metric ? init_buffer + window_size : -1;
        long divergent_count = 0;

        for (int it = 0; it < w; ++it) {
            const Transition tr = transition(z);
            if (tr.divergent) ++divergent_count;
            da.update(tr.accept_stat);
            step_ = da.current();

            const bool in_window = adapt_metric && it >= init_buffer && it < w - term_buffer;
            if (in_window) acc.add(z.q);
            if (adapt_metric && it + 1 == window_end) {
                if (acc.n > 1) {
                    const Vector var = acc.variance();
                    const double shrink = static_cast<double>(acc.n) / (acc.n + 5.0);
                    inv_metric_ = shrink * var.array() + (1.0 - shrink) * 1e-3;
                    inv_metric_ = inv_metric_.cwiseMax(1e-10);
                }
                acc.reset(dim_);
                step_ = find_initial_step(z);
                da.restart(step_, cfg_.target_accept);
                window_size *= 2;
                int next_end = window_end + window_size;
                if (next_end + 2 * window_size > w - term_buffer) next_end = w - term_buffer;
                window_end = next_end;
            }
        }
        if (w > 0) {
            if (divergent_count == w) {
                throw SamplingFailed("all warmup trajectories were divergent");
            }
            step_ = da.averaged();
        }
    }

    TargetDensity& target_;
    Rng rng_;
    const SamplerConfig& cfg_;
    int dim_;
    Vector inv_metric_;
    double step_ = 1.0;
};

int resolve_threads(const SamplerConfig& cfg) {
    int t = cfg.max_threads;
    if (t <= 0) {
        t = static_cast<int>(std::thread::hardware_concurrency());
        if (t <= 0) t = 1;
        if (const char* env = std::getenv("PROXTREND_THREADS")) {
            const int cap = std::atoi(env);
            if (cap > 0) t = std::min(t, cap);
        }
    }
    return std::max(1, t);
}

}  // namespace

void SamplerConfig::validate() const {
    if (n_warmup < 0 || n_draws < 1 || n_chains < 1) {
        throw InvalidConfig("sampler: counts must be positive");
    }
    if (!(target_accept > 0.5 && target_accept < 0.99)) {
        throw InvalidConfig("sampler: target_accept must lie in (0.5, 0.99)");
    }
    if (max_tree_depth < 1 || max_tree_depth > 14) {
        throw InvalidConfig("sampler: max_tree_depth must lie in 1..14");
    }
}

std::vector<ChainResult> sample(const TargetDensity& target, const Vector& init,
                                const SamplerConfig& config) {
    config.validate();
    if (init.size() != target.dim()) throw DimMismatch("sample: init length != target dim");

    std::vector<ChainResult> results(config.n_chains);
    std::vector<std::exception_ptr> errors(config.n_chains);

    auto run_chain = [&](int c) {
        try {
            auto local = target.clone();
            Rng rng = Rng::for_stream(config.seed, static_cast<std::uint64_t>(c));
            Vector start = init;
            if (config.init_jitter > 0.0) {
                for (Eigen::Index i = 0; i < start.size(); ++i) {
                    start[i] += config.init_jitter * rng.normal();
                }
            }
            NutsWorker worker(*local, rng, config);
            worker.run(start, results[c]);
        } catch (...) {
            errors[c] = std::current_exception();
        }
    };

    const int n_threads = std::min(resolve_threads(config), config.n_chains);
    if (n_threads <= 1) {
        for (int c = 0; c < config.n_chains; ++c) run_chain(c);
    } else {
        int next = 0;
        while (next < config.n_chains) {
            std::vector<std::thread> pool;
            const int batch = std::min(n_threads, config.n_chains - next);
            for (int t = 0; t < batch; ++t) pool.emplace_back(run_chain, next + t);
            for (auto& th : pool) th.join();
            next += batch;
        }
    }
    for (auto& err : errors) {
        if (err) std::rethrow_exception(err);
    }

    if (config.n_chains >= 2) {
        const DiagnosticsReport rep = diagnostics(results);
        for (auto& chain : results) {
            chain.rhat = rep.rhat;
            chain.ess = rep.ess;
        }
    }
    return results;
}

double standard_normal_quantile(double p) {
    // Acklam's rational approximation.
    static const double a[] = {-3.969683028665376e+01, 2.209460984245205e+02,
                               -2.759285104469687e+02, 1.383577518672690e+02,
                               -3.066479806614716e+01, 2.506628277459239e+00};
    static const double b[] = {-5.447609879822406e+01, 1.615858368580409e+02,
                               -1.556989798598866e+02, 6.680131188771972e+01,
                               -1.328068155288572e+01};
    static const double c[] = {-7.784894002430293e-03, -3.223964580411365e-01,
                               -2.400758277161838e+00, -2.549732539343734e+00,
                               4.374664141464968e+00,  2.938163982698783e+00};
    static const double d[] = {7.784695709041462e-03, 3.224671290700398e-01,
                               2.445134137142996e+00, 3.754408661907416e+00};
    if (p <= 0.0) return -kInf;
    if (p >= 1.0) return kInf;
    const double plow = 0.02425;
    if (p < plow) {
        const double q = std::sqrt(-2.0 * std::log(p));
        return (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
               ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
    }
    if (p > 1.0 - plow) {
        const double q = std::sqrt(-2.0 * std::log(1.0 - p));
        return -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
               ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
    }
    const double q = p - 0.5;
    const double r = q * q;
    return (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
           (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
}

namespace {

// Rank-normalize pooled draws: average ranks for ties, then map through the
// standard normal quantile function.
std::vector<Vector> rank_normalize(const std::vector<Vector>& segments) {
    const std::size_t S = segments.size();
    const Eigen::Index N = segments[0].size();
    const std::size_t total = S * static_cast<std::size_t>(N);
    std::vector<std::pair<double, std::size_t>> order(total);
    for (std::size_t s = 0; s < S; ++s)
        for (Eigen::Index i = 0; i < N; ++i)
            order[s * N + i] = {segments[s][i], s * N + i};
    std::sort(order.begin(), order.end());
    std::vector<double> rank(total);
    std::size_t i = 0;
    while (i < total) {
        std::size_t j = i;
        while (j < total && order[j].first == order[i].first) ++j;
        const double avg = 0.5 * static_cast<double>(i + j - 1) + 1.0;  // 1-based average rank
        for (std::size_t t = i; t < j; ++t) rank[order[t].second] = avg;
        i = j;
    }
    std::vector<Vector> z(S, Vector(N));
    for (std::size_t s = 0; s < S; ++s)
        for (Eigen::Index k = 0; k < N; ++k)
            z[s][k] = standard_normal_quantile((rank[s * N + k] - 0.375) / (total + 0.25));
    return z;
}

double autocovariance(const Vector& x, double mean, int lag) {
    const Eigen::Index N = x.size();
    double acc = 0.0;
    for (Eigen::Index i = 0; i + lag < N; ++i) acc += (x[i] - mean) * (x[i + lag] - mean);
    return acc / static_cast<double>(N);
}

}  // namespace

DiagnosticsReport diagnostics(const std::vector<ChainResult>& chains) {
    if (chains.size() < 2) throw InsufficientChains("diagnostics: need at least 2 chains");
    const Eigen::Index dim = chains[0].draws.cols();
    Eigen::Index n_draws = chains[0].draws.rows();
    for (const auto& chain : chains) {
        if (chain.draws.cols() != dim) throw DimMismatch("diagnostics: chain dims differ");
        n_draws = std::min(n_draws, chain.draws.rows());
    }
    const Eigen::Index half = n_draws / 2;
    if (half < 2) throw InsufficientChains("diagnostics: too few draws to split");

    DiagnosticsReport rep;
    rep.rhat.resize(dim);
    rep.ess.resize(dim);
    for (const auto& chain : chains) rep.total_divergences += chain.divergences;
    double acc = 0.0;
    for (const auto& chain : chains) acc += chain.accept_mean;
    rep.accept_mean = acc / static_cast<double>(chains.size());

    const std::size_t S = 2 * chains.size();
    for (Eigen::Index d = 0; d < dim; ++d) {
        std::vector<Vector> segs;
        segs.reserve(S);
        for (const auto& chain : chains) {
            segs.push_back(chain.draws.col(d).head(half));
            segs.push_back(chain.draws.col(d).tail(half));
        }
        const std::vector<Vector> z = rank_normalize(segs);

        Vector means(S), vars(S);
        for (std::size_t s = 0; s < S; ++s) {
            means[s] = z[s].mean();
            vars[s] = (z[s].array() - means[s]).square().sum() / static_cast<double>(half - 1);
        }
        const double W = vars.mean();
        const double mean_all = means.mean();
        const double B = static_cast<double>(half) *
                         (means.array() - mean_all).square().sum() / (S - 1.0);
        const double var_plus = (half - 1.0) / half * W + B / half;

        if (!(var_plus > 0.0) || !(W > 0.0)) {
            rep.rhat[d] = (B > 0.0 && !(W > 0.0)) ? kInf : 1.0;
            rep.ess[d] = static_cast<double>(S) * half;
            continue;
        }
        // clamp from below: values under 1 are finite-sample noise
        rep.rhat[d] = std::max(1.0, std::sqrt(var_plus / W));

        // Geyer initial monotone sequence on the combined autocorrelations
        const int max_lag = static_cast<int>(std::min<Eigen::Index>(half - 1, 1000));
        auto rho_at = [&](int t) {
            double acov = 0.0;
            for (std::size_t s = 0; s < S; ++s) acov += autocovariance(z[s], means[s], t);
            acov /= static_cast<double>(S);
            return 1.0 - (W - acov) / var_plus;
        };
        double tau = 1.0;
        double prev_pair = kInf;
        for (int t = 1; t + 1 <= max_lag; t += 2) {
            double pair = rho_at(t) + rho_at(t + 1);
            if (pair < 0.0) break;
            pair = std::min(pair, prev_pair);  // enforce monotonicity
            prev_pair = pair;
            tau += 2.0 * pair;
        }
        rep.ess[d] = static_cast<double>(S) * half / tau;
    }
    for (Eigen::Index d = 0; d < dim; ++d) {
        if (rep.rhat[d] > 1.05) rep.flagged.push_back(static_cast<int>(d));
    }
    return rep;
}

}  // namespace proxtrend
