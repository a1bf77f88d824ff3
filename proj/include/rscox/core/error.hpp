#pragma once

#include <cmath>
#include <stdexcept>
#include <string>

namespace rscox {

/// Invalid user input: bad dimensions, violated invariants, malformed files.
class InputError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// A computation produced a non-finite or otherwise unusable value.
class NumericError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

inline void require(bool ok, const std::string& what)
{
    if (!ok) {
        throw InputError(what);
    }
}

template <typename T>
T checkedFinite(T value, const char* context)
{
    if (!std::isfinite(value)) {
        throw NumericError(std::string(context) + ": non-finite result");
    }
    return value;
}

}  // namespace rscox
