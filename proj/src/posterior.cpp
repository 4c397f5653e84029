#include "proxtrend/posterior.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <sstream>
#include <utility>

namespace proxtrend {

namespace {

struct Sufficient {
    Vector ybar;
    Vector w;
    double sse;
    double m;
};

Sufficient collect(const TrendData& data) {
    if (data.n() == 0) throw EmptyData("posterior: empty data");
    return {data.ybar, data.weights_real(), data.sse, static_cast<double>(data.m)};
}

[[noreturn]] void throw_nonfinite(const char* which, const ParamState& state) {
    std::ostringstream msg;
    msg << which << ": non-finite log density at log_sigma2=" << state.log_sigma2
        << ", log_alpha=" << state.log_alpha << ", |primary|_inf="
        << (state.primary.size() ? state.primary.cwiseAbs().maxCoeff() : 0.0);
    throw NonFiniteDensity(msg.str());
}

}  // namespace

bool LogDensityGrad::finite() const {
    return std::isfinite(value) && std::isfinite(grad_log_sigma2) && std::isfinite(grad_log_alpha) &&
           grad_primary.allFinite();
}

ReparamScheme reparam_for(int k, int n) {
    if (k == 1) {
        if (n <= 200) return ReparamScheme::T1;
        if (n <= 1000) return ReparamScheme::T2;
        throw InvalidConfig("PBTF with k=1 requires n <= 1000; thin the grid first (--thin)");
    }
    if (k == 2) {
        if (n <= 200) return ReparamScheme::T2;
        throw InvalidConfig("PBTF with k=2 requires n <= 200; thin the grid first (--thin)");
    }
    throw InvalidConfig("PBTF supports k = 1 or 2 only");
}

ModelSpec ModelSpec::resolve(const TrendData& data) const {
    ModelSpec out = *this;
    const int n = data.n();
    if (out.k < 1 || out.k > 2) throw InvalidConfig("model order k must be 1 or 2");
    if (n < out.k + 2) throw InvalidConfig("grid too short for requested order");
    if (!(out.s > 0.0) || !(out.r > 0.0)) throw InvalidConfig("s and r must be positive");
    const double vy = data.var_y();
    if (out.model == Model::PBTF) {
        if (out.lambda <= 0.0) {
            out.lambda = std::min(1e-4 * vy, 1.0 / (static_cast<double>(n) * n));
        }
        if (out.s2 <= 0.0) out.s2 = std::sqrt(static_cast<double>(n));
        if (!out.reparam) out.reparam = reparam_for(out.k, n);
        if (out.shape.any()) throw InvalidConfig("shape restrictions require --model pbsrtf");
    } else {
        if (out.lambda <= 0.0) out.lambda = 1e-4 * vy;
        if (!(out.mu > 0.0)) throw InvalidConfig("mu must be positive");
        out.reparam.reset();
    }
    if (!(out.lambda > 0.0)) {
        // constant data can produce Var(y) = 0; keep the envelope usable
        out.lambda = std::max(out.lambda, 1.0 / (static_cast<double>(n) * n));
    }
    return out;
}

Evaluation SurrogatePosterior::eval(const Vector& position) {
    const LogDensityGrad g = eval_state(unpack(position));
    Evaluation out;
    out.value = g.value;
    out.grad.resize(position.size());
    out.grad.head(position.size() - 2) = g.grad_primary;
    out.grad[position.size() - 2] = g.grad_log_sigma2;
    out.grad[position.size() - 1] = g.grad_log_alpha;
    return out;
}

ParamState SurrogatePosterior::unpack(const Vector& position) {
    ParamState s;
    s.primary = position.head(position.size() - 2);
    s.log_sigma2 = position[position.size() - 2];
    s.log_alpha = position[position.size() - 1];
    return s;
}

Vector SurrogatePosterior::pack(const ParamState& state) {
    Vector q(state.primary.size() + 2);
    q.head(state.primary.size()) = state.primary;
    q[state.primary.size()] = state.log_sigma2;
    q[state.primary.size() + 1] = state.log_alpha;
    return q;
}

namespace {

class PbtfPosterior final : public SurrogatePosterior {
public:
    PbtfPosterior(const TrendData& data, const ModelSpec& spec)
        : spec_(spec),
          stats_(collect(data)),
          reparam_(data.grid, spec.k, *spec.reparam),
          nks2_(data.n() - spec.k + spec.s2) {}

    int n() const override { return reparam_.n(); }
    const ModelSpec& spec() const override { return spec_; }

    std::unique_ptr<TargetDensity> clone() const override {
        return std::make_unique<PbtfPosterior>(*this);
    }

    LogDensityGrad eval_state(const ParamState& state) override {
        if (state.primary.size() != n()) throw DimMismatch("pbtf: primary length != n");
        const double sigma2 = std::exp(state.log_sigma2);
        const double alpha = std::exp(state.log_alpha);
        const double lam = spec_.lambda;

        const Vector beta = reparam_.forward_solve(state.primary);
        const Vector resid = stats_.ybar - beta;
        const Vector wr = stats_.w.cwiseProduct(resid);
        const double quad = resid.dot(wr);
        const double qtot = quad + stats_.sse + 2.0 * spec_.r;

        const int sb = reparam_.slice_begin();
        const int ns = reparam_.slice_length();
        const Vector slice = state.primary.segment(sb, ns);
        const Projection proj = reparam_.scheme() == ReparamScheme::T1
                                    ? project_epi_l1(slice, alpha)
                                    : project_epi_tv(slice, alpha, reparam_.pseudosolve());

        LogDensityGrad out;
        out.value = -(stats_.m / 2.0 + spec_.s) * state.log_sigma2 - qtot / (2.0 * sigma2) -
                    proj.distance_sq / (2.0 * lam) + state.log_alpha -
                    nks2_ * std::log1p(alpha);
        out.grad_primary = reparam_.transpose_solve(wr) / sigma2;
        out.grad_primary.segment(sb, ns) -= (slice - proj.point) / lam;
        out.grad_log_sigma2 = -(stats_.m / 2.0 + spec_.s) + qtot / (2.0 * sigma2);
        out.grad_log_alpha =
            -(alpha / lam) * (alpha - proj.alpha) + 1.0 - nks2_ * alpha / (1.0 + alpha);
        if (!out.finite()) throw_nonfinite("pbtf", state);
        return out;
    }

    const ReparamMatrix& reparam() const { return reparam_; }

private:
    ModelSpec spec_;
    Sufficient stats_;
    ReparamMatrix reparam_;
    double nks2_;
};

class PbsrtfPosterior final : public SurrogatePosterior {
public:
    PbsrtfPosterior(const TrendData& data, const ModelSpec& spec)
        : spec_(spec),
          stats_(collect(data)),
          diff_(data.grid, spec.k + 1),
          projector_(diff_, spec.shape) {}

    int n() const override { return diff_.n(); }
    const ModelSpec& spec() const override { return spec_; }

    std::unique_ptr<TargetDensity> clone() const override {
        return std::make_unique<PbsrtfPosterior>(*this);
    }

    LogDensityGrad eval_state(const ParamState& state) override {
        if (state.primary.size() != n()) throw DimMismatch("pbsrtf: primary length != n");
        const double sigma2 = std::exp(state.log_sigma2);
        const double alpha = std::exp(state.log_alpha);
        const double lam = spec_.lambda;

        const Vector resid = stats_.ybar - state.primary;
        const Vector wr = stats_.w.cwiseProduct(resid);
        const double qtot = resid.dot(wr) + stats_.sse + 2.0 * spec_.r;

        Projection proj;
        try {
            proj = projector_.project(state.primary, alpha);
        } catch (const ConvergenceError& e) {
            std::ostringstream msg;
            msg << e.what() << " (at log_sigma2=" << state.log_sigma2
                << ", log_alpha=" << state.log_alpha << ")";
            throw ConvergenceError(msg.str());
        }

        LogDensityGrad out;
        out.value = -(stats_.m / 2.0 + spec_.s) * state.log_sigma2 - qtot / (2.0 * sigma2) -
                    proj.distance_sq / (2.0 * lam) + state.log_alpha - spec_.mu * alpha;
        out.grad_primary = wr / sigma2 - (state.primary - proj.point) / lam;
        out.grad_log_sigma2 = -(stats_.m / 2.0 + spec_.s) + qtot / (2.0 * sigma2);
        out.grad_log_alpha = -(alpha / lam) * (alpha - proj.alpha) + 1.0 - spec_.mu * alpha;
        if (!out.finite()) throw_nonfinite("pbsrtf", state);
        return out;
    }

    ShapeProjector& projector() { return projector_; }
    const DiffOperator& diff() const { return diff_; }

private:
    ModelSpec spec_;
    Sufficient stats_;
    DiffOperator diff_;
    ShapeProjector projector_;
};

}  // namespace

std::unique_ptr<SurrogatePosterior> make_posterior(const TrendData& data, const ModelSpec& spec) {
    if (spec.model == Model::PBTF) {
        if (!spec.reparam) throw InvalidConfig("make_posterior: spec must be resolved first");
        return std::make_unique<PbtfPosterior>(data, spec);
    }
    return std::make_unique<PbsrtfPosterior>(data, spec);
}

LogDensityGrad logpdf_grad_pbtf(const ParamState& state, const TrendData& data, const ModelSpec& spec) {
    if (spec.model != Model::PBTF) throw InvalidConfig("logpdf_grad_pbtf: spec.model must be PBTF");
    return make_posterior(data, spec.resolve(data))->eval_state(state);
}

LogDensityGrad logpdf_grad_pbsrtf(const ParamState& state, const TrendData& data, const ModelSpec& spec) {
    if (spec.model != Model::PBSRTF) {
        throw InvalidConfig("logpdf_grad_pbsrtf: spec.model must be PBSRTF");
    }
    return make_posterior(data, spec.resolve(data))->eval_state(state);
}

namespace {

// Weighted degree-k polynomial least-squares fit, the trend-filter null
// model. Its fitted values are annihilated by the order-(k+1) difference
// operator, so the initial state sits strictly inside the epigraph with a
// small alpha, and its residual variance over-estimates sigma^2. Starting
// at the saturated fit ybar instead would put the chain in the overfitting
// basin (huge alpha, collapsing sigma^2) that warmup cannot leave.
struct LeastSquaresFit {
    Vector fitted;
    double resid_var;
};

LeastSquaresFit polyfit(const TrendData& data, int degree) {
    const int n = data.n();
    const double x0 = data.grid.front();
    const double span = std::max(data.grid.back() - x0, 1e-12);
    Matrix design(n, degree + 1);
    for (int i = 0; i < n; ++i) {
        const double u = 2.0 * (data.grid[i] - x0) / span - 1.0;
        double p = 1.0;
        for (int j = 0; j <= degree; ++j) {
            design(i, j) = p;
            p *= u;
        }
    }
    const Vector w = data.weights_real();
    const Matrix wx = w.asDiagonal() * design;
    const Vector coef = (design.transpose() * wx).ldlt().solve(wx.transpose() * data.ybar);
    LeastSquaresFit out;
    out.fitted = design * coef;
    const Vector resid = data.ybar - out.fitted;
    double ss = data.sse;
    for (int i = 0; i < n; ++i) ss += w[i] * resid[i] * resid[i];
    out.resid_var = ss / static_cast<double>(data.m);
    return out;
}

}  // namespace

ParamState initialize(const TrendData& data, const ModelSpec& spec) {
    const ModelSpec resolved = spec.resolve(data);
    ParamState state;
    const LeastSquaresFit ls = polyfit(data, resolved.k);
    Vector beta0 = ls.fitted;
    DiffOperator diff(data.grid, resolved.k + 1);
    if (resolved.model == Model::PBSRTF && resolved.shape.any()) {
        ShapeProjector projector(diff, resolved.shape);
        beta0 = projector.project_cone(beta0);
    }
    const double vy = data.var_y();
    const double sigma2 = std::max(
        {data.sse / static_cast<double>(data.m), ls.resid_var, 1e-6 * std::max(vy, 1e-12)});
    state.log_sigma2 = std::log(sigma2);
    state.log_alpha = std::log(diff.penalty(beta0) + 1.0);
    if (resolved.model == Model::PBTF) {
        ReparamMatrix reparam(data.grid, resolved.k, *resolved.reparam);
        state.primary = reparam.apply(beta0);
    } else {
        state.primary = beta0;
    }
    return state;
}

Rescale Rescale::fit(const TrendData& data, double target_span) {
    Rescale rs;
    const double xmin = data.grid.front();
    const double xmax = data.grid.back();
    rs.x_off = xmin;
    rs.x_scale = xmax > xmin ? target_span / (xmax - xmin) : 1.0;
    double ymin = data.ybar.minCoeff();
    double ymax = data.ybar.maxCoeff();
    if (data.raw) {
        for (const auto& [x, y] : *data.raw) {
            ymin = std::min(ymin, y);
            ymax = std::max(ymax, y);
        }
    }
    rs.y_off = ymin;
    rs.y_scale = ymax > ymin ? target_span / (ymax - ymin) : 1.0;
    return rs;
}

TrendData Rescale::apply(const TrendData& data) const {
    TrendData out = data;
    for (auto& x : out.grid) x = (x - x_off) * x_scale;
    out.ybar = (out.ybar.array() - y_off) * y_scale;
    out.sse = data.sse * y_scale * y_scale;
    if (out.raw) {
        for (auto& [x, y] : *out.raw) {
            x = (x - x_off) * x_scale;
            y = (y - y_off) * y_scale;
        }
    }
    return out;
}

}  // namespace proxtrend
