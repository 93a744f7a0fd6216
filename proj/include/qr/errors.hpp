#pragma once

#include <stdexcept>
#include <string>

namespace qr {

/// Base class for all recoverable failures raised by this library.
/// Solver outcomes that are expected in normal operation (escape in finite
/// time, step-size collapse) are reported through status enums instead.
struct Error : std::runtime_error {
    explicit Error(const std::string& what) : std::runtime_error(what) {}
};

/// Inversion of a quaternion whose norm is at or below the zero threshold.
struct NearZeroDivisor : Error {
    using Error::Error;
};

/// A 4x4 matrix handed to unsymbol() does not carry the symbol structure.
struct NotASymbol : Error {
    using Error::Error;
};

/// Coefficient evaluated outside its validity interval or a table's grid.
struct OutOfDomain : Error {
    using Error::Error;
};

/// Adaptive quadrature exhausted its interval budget above the target error.
struct ToleranceNotMet : Error {
    using Error::Error;
};

/// Malformed scenario or coefficient description; `path` names the field.
struct SchemaError : Error {
    std::string path;
    SchemaError(const std::string& path_, const std::string& what)
        : Error(path_ + ": " + what), path(path_) {}
};

/// Solution-family evaluation at a parameter/time pair where the family
/// denominator is numerically zero (a pole of the family).
struct FamilySingular : Error {
    using Error::Error;
};

/// Extremal construction requested where the tail integral vanishes.
struct NuVanishes : Error {
    using Error::Error;
};

/// Projection of a system solution at a time where the first component
/// has no inverse.
struct PhiVanishes : Error {
    using Error::Error;
};

/// Trajectory queried outside the time span it covers.
struct OutOfRange : Error {
    using Error::Error;
};

}  // namespace qr
