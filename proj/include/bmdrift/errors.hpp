#pragma once

#include <stdexcept>
#include <string>

namespace bmdrift {

// Bad input: wrong shapes, out-of-range parameters, violated preconditions.
class ValidationError : public std::invalid_argument {
public:
    explicit ValidationError(const std::string& what) : std::invalid_argument(what) {}
};

// A numerical routine could not deliver its contract (quadrature did not
// converge, covariance not factorizable, budget exceeded...).
class NumericalError : public std::runtime_error {
public:
    explicit NumericalError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace bmdrift
