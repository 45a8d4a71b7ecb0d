#pragma once

#include <stdexcept>
#include <string>

namespace gex {

// Thrown when an estimator degenerates on the data at hand (zero
// normalization mass, all observations censored, no admissible grid
// minimum, ...). Kept distinct from std::runtime_error so callers can
// tell a data breakdown apart from a numerical failure.
class breakdown_error : public std::runtime_error {
public:
    explicit breakdown_error(const std::string& what_arg)
        : std::runtime_error(what_arg) {}
};

}  // namespace gex
