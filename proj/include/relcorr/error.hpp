#pragma once

#include <stdexcept>
#include <string>

namespace relcorr {

// Malformed or unusable input data (bad CSV, too few rows, unknown attribute).
class DataError : public std::runtime_error {
public:
    explicit DataError(const std::string& what) : std::runtime_error(what) {}
};

// Invalid parameters supplied by a caller (k < 1, alpha outside (0,1], ...).
class UsageError : public std::invalid_argument {
public:
    explicit UsageError(const std::string& what) : std::invalid_argument(what) {}
};

} // namespace relcorr
