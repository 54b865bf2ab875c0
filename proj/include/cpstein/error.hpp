// error.hpp
#pragma once

#include <stdexcept>
#include <string>

namespace cpstein {

// Base of every error thrown by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Input violates a documented precondition.
class InvalidInput : public Error {
public:
    using Error::Error;
};

// Work would exceed a hard size or truncation budget.
class BudgetExceeded : public Error {
public:
    using Error::Error;
};

// A truncated computation did not stabilise.
class NotConverged : public Error {
public:
    using Error::Error;
};

} // namespace cpstein
