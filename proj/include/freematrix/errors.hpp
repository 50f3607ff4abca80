#pragma once

#include <stdexcept>
#include <string>

namespace freematrix {

/// Base class for all errors raised by this library.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct DimensionMismatch : Error {
    using Error::Error;
};

struct NotSelfAdjoint : Error {
    using Error::Error;
};

struct NotSymmetric : Error {
    using Error::Error;
};

struct NegativeVariance : Error {
    using Error::Error;
};

struct NotPsd : Error {
    using Error::Error;
};

struct NotRegular : Error {
    using Error::Error;
};

struct NotAPartition : Error {
    using Error::Error;
};

struct NotOrthonormal : Error {
    using Error::Error;
};

struct SizeLimitExceeded : Error {
    using Error::Error;
};

struct WorkBudgetExceeded : Error {
    using Error::Error;
};

struct NonConvergence : Error {
    using Error::Error;
};

struct ImPartNotPd : Error {
    using Error::Error;
};

struct A0NotZero : Error {
    using Error::Error;
};

struct NotIndependentEntryModel : Error {
    using Error::Error;
};

struct ParseError : Error {
    using Error::Error;
};

}  // namespace freematrix
