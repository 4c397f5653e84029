#ifndef PROXTREND_ERRORS_HPP
#define PROXTREND_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace proxtrend {

/// Base class for all errors raised by this library.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

struct InvalidGrid : Error { using Error::Error; };
struct OrderTooHigh : Error { using Error::Error; };
struct DimMismatch : Error { using Error::Error; };
struct SingularMatrix : Error { using Error::Error; };
struct InvalidLambda : Error { using Error::Error; };
struct BracketError : Error { using Error::Error; };
struct ConvergenceError : Error { using Error::Error; };
struct NonFiniteDensity : Error { using Error::Error; };
struct SamplingFailed : Error { using Error::Error; };
struct InsufficientChains : Error { using Error::Error; };
struct EmptyData : Error { using Error::Error; };
struct UnknownTrend : Error { using Error::Error; };
struct EmptyChains : Error { using Error::Error; };
struct ParseError : Error { using Error::Error; };
struct InvalidConfig : Error { using Error::Error; };

}  // namespace proxtrend

#endif  // PROXTREND_ERRORS_HPP
