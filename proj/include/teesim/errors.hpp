#pragma once

#include <stdexcept>
#include <string>

namespace teesim {

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Shape or dimension mismatch between operands.
class ShapeError : public Error {
public:
    using Error::Error;
};

// Access outside a registered buffer's range.
class BoundsError : public Error {
public:
    using Error::Error;
};

// Wrong codec tag, invalid bit width, truncated payload.
class CodecError : public Error {
public:
    using Error::Error;
};

// No partition plan fits the memory budget.
class InfeasibleBudget : public Error {
public:
    using Error::Error;
};

// Model file could not be parsed or validated.
class ParseError : public Error {
public:
    using Error::Error;
};

} // namespace teesim
