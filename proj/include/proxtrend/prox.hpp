#ifndef PROXTREND_PROX_HPP
#define PROXTREND_PROX_HPP

#include <functional>

#include "proxtrend/linalg.hpp"

namespace proxtrend {

/// Proximal point together with the penalty value g(point). The bisection
/// driver in the epigraph module consumes the pair to evaluate its root
/// function without recomputing g.
struct ProxResult {
    Vector point;
    double objective = 0.0;
};

/// Elementwise soft threshold: prox of lambda * ||.||_1.
/// objective = ||point||_1. Ties |beta_i| == lambda map to 0.
ProxResult soft_threshold(const Vector& beta, double lambda);

/// Exact prox of lambda * ||D1 .||_1 (1-D total variation), solved by the
/// linear-time dynamic program over the piecewise-linear derivative messages.
/// objective = ||D1 point||_1.
ProxResult fused_lasso(const Vector& beta, double lambda);

using ProxFn = std::function<ProxResult(const Vector&, double)>;

struct EnvelopeResult {
    double value = 0.0;
    Vector grad;
};

/// Moreau-Yosida envelope value and gradient of g at z:
///   value = g(p) + ||z - p||^2 / (2 lambda),   grad = (z - p) / lambda,
/// with p = prox of lambda*g at z. For indicator functions (prox = plain
/// projection) the value specializes to the halved squared distance over
/// lambda.
EnvelopeResult envelope_value_grad(const ProxFn& g_prox, const Vector& z, double lambda);

}  // namespace proxtrend

#endif  // PROXTREND_PROX_HPP
