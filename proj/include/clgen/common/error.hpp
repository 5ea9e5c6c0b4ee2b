#pragma once

#include <stdexcept>
#include <string>

namespace clgen {

/// Base class for all errors raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A numerical routine produced a non-finite value or failed to converge.
class NumericalError : public Error {
public:
    using Error::Error;
};

/// Input data (files, configs, records) could not be parsed or validated.
class InputError : public Error {
public:
    using Error::Error;
};

} // namespace clgen
