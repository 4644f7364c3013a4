#ifndef MMT_ERRORS_HPP
#define MMT_ERRORS_HPP

#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace mmt {

// Bad sizes, unknown names, malformed inputs.
struct InvalidArgument : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

// A documented precondition of the called operation does not hold.
struct PreconditionViolation : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// No factor mode of either decomposition has clustering number one.
struct AssumptionViolation : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// A rank/nullity decision could not be made from the singular spectrum.
struct NumericalRankAmbiguity : std::runtime_error {
    NumericalRankAmbiguity(const std::string& what, std::vector<double> spectrum)
        : std::runtime_error(what), spectrum(std::move(spectrum)) {}
    std::vector<double> spectrum;
};

// The rank-1 terms of a decomposition are linearly dependent.
struct DegenerateTerms : std::runtime_error {
    using std::runtime_error::runtime_error;
};

}  // namespace mmt

#endif
