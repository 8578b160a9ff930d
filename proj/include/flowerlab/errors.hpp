#pragma once

#include <stdexcept>
#include <string>

namespace flowerlab {

// Base class for everything this library throws on a contract violation.
struct Error : std::runtime_error {
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

// Germ construction/normalization failures: a_i = 0, <a,M> = 0, empty M, ...
struct DegenerateGerm : Error {
    using Error::Error;
};

// An iterative solve ran out of budget; carries the last residual seen.
struct NoConvergence : Error {
    double residual;
    NoConvergence(const std::string& msg, double res) : Error(msg), residual(res) {}
};

// A negative integer exponent met a zero coordinate.
struct ZeroCoordinate : Error {
    using Error::Error;
};

struct ZeroMultiIndex : Error {
    using Error::Error;
};

// gcd of the nonzero entries is not 1 where a primitive vector is required.
struct NotPrimitive : Error {
    using Error::Error;
};

// zero entries of m must occupy the trailing positions.
struct BadOrdering : Error {
    using Error::Error;
};

// Exact integer result does not fit the fixed-width storage.
struct LatticeOverflow : Error {
    using Error::Error;
};

// arg(x^m) fell outside the branch window of the requested petal component.
struct OutsidePetalBranch : Error {
    using Error::Error;
};

// Point is not in the petal a computation requires.
struct OutsidePetal : Error {
    using Error::Error;
};

// Chart point is not in the sector domain V.
struct OutsideV : Error {
    using Error::Error;
};

struct BranchError : Error {
    using Error::Error;
};

// Petal calibration could not find workable parameters; carries a witness point.
struct CalibrationFailed : Error {
    std::string witness;
    CalibrationFailed(const std::string& msg, std::string wit = {})
        : Error(msg), witness(std::move(wit)) {}
};

struct EmptySample : Error {
    using Error::Error;
};

// The w-slice V_w is empty (R_w not finite at this w).
struct EmptySlice : Error {
    using Error::Error;
};

// A search exhausted its budget without meeting its target.
struct NotReached : Error {
    using Error::Error;
};

// An operation was called outside its stated hypotheses (e.g. non-normalized germ).
struct PreconditionViolated : Error {
    using Error::Error;
};

struct ConfigError : Error {
    using Error::Error;
};

} // namespace flowerlab
