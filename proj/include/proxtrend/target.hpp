#ifndef PROXTREND_TARGET_HPP
#define PROXTREND_TARGET_HPP

#include <memory>

#include "proxtrend/linalg.hpp"

namespace proxtrend {

struct Evaluation {
    double value = 0.0;
    Vector grad;
};

/// Differentiable unnormalized log density on an unrestricted domain.
/// clone() must produce an instance safe to use from another worker thread
/// (evaluators may keep per-instance mutable caches).
class TargetDensity {
public:
    virtual ~TargetDensity() = default;
    virtual int dim() const = 0;
    virtual Evaluation eval(const Vector& position) = 0;
    virtual std::unique_ptr<TargetDensity> clone() const = 0;
};

}  // namespace proxtrend

#endif  // PROXTREND_TARGET_HPP
