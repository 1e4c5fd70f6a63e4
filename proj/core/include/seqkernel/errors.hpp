#pragma once

#include <stdexcept>
#include <string>

namespace seqkernel {

// Base of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed caller input: shape mismatches, missing columns, bad cells.
class InputError : public Error {
 public:
  using Error::Error;
};

// Invalid configuration values such as nonpositive lengthscales.
class ConfigError : public Error {
 public:
  using Error::Error;
};

// Factorization failure, degenerate penalties, non-finite scores.
class NumericalError : public Error {
 public:
  using Error::Error;
};

// Operation not defined for the given model or kernel variant.
class UnsupportedError : public Error {
 public:
  using Error::Error;
};

[[noreturn]] void throw_input(const std::string& what);
[[noreturn]] void throw_config(const std::string& what);
[[noreturn]] void throw_numerical(const std::string& what);
[[noreturn]] void throw_unsupported(const std::string& what);

}  // namespace seqkernel
