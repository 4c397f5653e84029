#ifndef PROXTREND_POSTERIOR_HPP
#define PROXTREND_POSTERIOR_HPP

#include <memory>
#include <optional>

#include "proxtrend/data.hpp"
#include "proxtrend/epigraph.hpp"
#include "proxtrend/linalg.hpp"
#include "proxtrend/target.hpp"

namespace proxtrend {

enum class Model { PBTF, PBSRTF };

/// Reparameterization rule by grid length (PBTF). Throws InvalidConfig with
/// a thinning hint when the grid is too long for either scheme.
ReparamScheme reparam_for(int k, int n);

struct ModelSpec {
    int k = 1;  // trend order: 1 (piecewise linear) or 2 (piecewise quadratic)
    Model model = Model::PBTF;
    std::optional<ReparamScheme> reparam;  // PBTF only; defaulted by grid length
    double lambda = 0.0;                   // envelope parameter; <= 0 means default
    double s = 0.01;                       // inverse-Gamma shape for sigma^2
    double r = 0.01;                       // inverse-Gamma rate for sigma^2
    double s2 = 0.0;                       // beta-prime second shape; <= 0 means sqrt(n)
    double mu = 3.0;                       // Gamma rate on alpha (PBSRTF)
    ShapeSpec shape;                       // PBSRTF only

    /// Fills defaults (lambda, s2, reparam) from the data and validates the
    /// configuration. Defaults: PBTF lambda = min(1e-4 Var(y), n^-2),
    /// s2 = sqrt(n); PBSRTF lambda = 1e-4 Var(y).
    ModelSpec resolve(const TrendData& data) const;
};

struct ParamState {
    Vector primary;  // theta for PBTF, beta for PBSRTF
    double log_sigma2 = 0.0;
    double log_alpha = 0.0;
};

struct LogDensityGrad {
    double value = 0.0;
    Vector grad_primary;
    double grad_log_sigma2 = 0.0;
    double grad_log_alpha = 0.0;

    bool finite() const;
};

/// Surrogate log posterior in the (primary, log sigma^2, log alpha)
/// parameterization, with analytic gradients. Throws NonFiniteDensity when
/// an evaluation is not finite.
class SurrogatePosterior : public TargetDensity {
public:
    virtual LogDensityGrad eval_state(const ParamState& state) = 0;
    virtual const ModelSpec& spec() const = 0;
    virtual int n() const = 0;

    int dim() const override { return n() + 2; }
    Evaluation eval(const Vector& position) override;

    static ParamState unpack(const Vector& position);
    static Vector pack(const ParamState& state);
};

/// Builds the PBTF or PBSRTF surrogate posterior for resolved `spec`.
std::unique_ptr<SurrogatePosterior> make_posterior(const TrendData& data, const ModelSpec& spec);

/// Spec-level entry points (resolve + construct + evaluate); conveniences
/// for direct density evaluation outside a sampling run.
LogDensityGrad logpdf_grad_pbtf(const ParamState& state, const TrendData& data, const ModelSpec& spec);
LogDensityGrad logpdf_grad_pbsrtf(const ParamState& state, const TrendData& data, const ModelSpec& spec);

/// Least-squares initial state: beta0 = ybar (projected onto the shape cone
/// when infeasible), sigma^2_0 = max(SSE/m, 1e-6 Var(y)), alpha0 strictly
/// feasible; theta0 = T beta0 for PBTF.
ParamState initialize(const TrendData& data, const ModelSpec& spec);

/// Affine map taking x and y each onto [0, target_span], applied to PBSRTF
/// inputs before sampling; draws are mapped back afterward.
struct Rescale {
    double x_off = 0.0, x_scale = 1.0;  // x' = (x - x_off) * x_scale
    double y_off = 0.0, y_scale = 1.0;

    static Rescale fit(const TrendData& data, double target_span = 10.0);
    TrendData apply(const TrendData& data) const;
    double beta_to_original(double beta_scaled) const { return y_off + beta_scaled / y_scale; }
    double sigma2_to_original(double s2_scaled) const { return s2_scaled / (y_scale * y_scale); }
    bool identity() const { return x_off == 0.0 && x_scale == 1.0 && y_off == 0.0 && y_scale == 1.0; }
};

}  // namespace proxtrend

#endif  // PROXTREND_POSTERIOR_HPP
