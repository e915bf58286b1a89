#pragma once

#include <stdexcept>
#include <string>

namespace simba {

// Base of every exception thrown by the library.
class error : public std::runtime_error {
   public:
    using std::runtime_error::runtime_error;
};

// Bad arguments or configuration (CLI exit code 2).
class usage_error : public error {
   public:
    using error::error;
};

// Malformed or inconsistent input data (CLI exit code 3).
class data_error : public error {
   public:
    using error::error;
};

// Non-finite values or sampler breakdown (CLI exit code 4).
class numerical_error : public error {
   public:
    using error::error;
};

// A caller broke a documented precondition, e.g. an n/a mapping cell.
class contract_error : public error {
   public:
    using error::error;
};

}  // namespace simba
