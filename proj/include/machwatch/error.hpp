#ifndef MACHWATCH_ERROR_HPP
#define MACHWATCH_ERROR_HPP

#include <stdexcept>
#include <string>

namespace machwatch {

/// Base of every exception thrown by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Input data violates a contract (bad CSV, unknown token, empty range, ...).
/// The CLI maps this to exit code 2.
class DataError : public Error {
public:
    using Error::Error;
};

/// A referenced entity (annotation id, run, model, group) does not exist.
class NotFound : public DataError {
public:
    using DataError::DataError;
};

}  // namespace machwatch

#endif  // MACHWATCH_ERROR_HPP
