#ifndef OMCV_ERRORS_HPP
#define OMCV_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace omcv {

/// Operator/state dimensions incompatible with the space they claim to live on.
struct DimensionError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

/// Parameter outside its mathematical domain (s <= 0, r >= 1, ...).
struct DomainError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

/// A construction lost more norm/trace to the Fock cutoff than the caller allowed.
struct TruncationError : std::runtime_error {
    TruncationError(const std::string& what, double loss)
        : std::runtime_error(what), achieved_loss(loss) {}
    double achieved_loss;
};

/// Iteration or integration failed to converge, or the dynamics was detected unstable.
struct NumericalError : std::runtime_error {
    explicit NumericalError(const std::string& what, double res = 0.0)
        : std::runtime_error(what), residual(res) {}
    double residual;
};

/// Requested computation exceeds the configured memory budget.
struct ResourceError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Homodyne grid does not cover the marginal (tail mass too large).
struct GridError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Conditioning on a measurement outcome whose density underflows.
struct RareOutcomeError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct UnsupportedOperationError : std::logic_error {
    using std::logic_error::logic_error;
};

}  // namespace omcv

#endif
