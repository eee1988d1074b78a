#pragma once

#include <stdexcept>
#include <string>

namespace adaseg {

/// Base of every exception thrown by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Invalid hyperparameter, window size, bound ordering, ...
class ParameterError : public Error {
public:
    using Error::Error;
};

/// Two grids that must share a shape do not.
class DimensionError : public Error {
public:
    using Error::Error;
};

class IoError : public Error {
public:
    using Error::Error;
};

/// The file parsed but is not a single-channel grayscale image.
class UnsupportedFormatError : public IoError {
public:
    using IoError::IoError;
};

/// The input carries no two-phase information (e.g. a constant image).
class DegenerateImageError : public Error {
public:
    using Error::Error;
};

} // namespace adaseg
