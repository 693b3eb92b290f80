#pragma once

#include <stdexcept>
#include <string>

namespace cfmd {

// Precondition violations on caller-supplied data (shapes, ranges, lengths).
class InvalidInput : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

// NaN/Inf encountered where finite values are required.
class NumericError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class IoError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

} // namespace cfmd
