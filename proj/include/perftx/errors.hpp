#pragma once

#include <stdexcept>
#include <string>

namespace perftx {

/// Invalid input: bad domain values, malformed files, dimension mismatches.
class ValidationError : public std::runtime_error {
public:
    explicit ValidationError(const std::string& what) : std::runtime_error(what) {}
};

/// Numerical failure: factorization did not succeed, non-finite objective.
class NumericError : public std::runtime_error {
public:
    explicit NumericError(const std::string& what) : std::runtime_error(what) {}
};

} // namespace perftx
