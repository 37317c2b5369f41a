#pragma once

#include <stdexcept>
#include <string>

namespace eit3d {

// Base class for all library failures.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

// Bad parameters, violated preconditions, malformed configuration.
class ConfigError : public Error {
 public:
  explicit ConfigError(const std::string& msg) : Error(msg) {}
};

// Solver breakdown, singular systems, non-convergence.
class NumericalError : public Error {
 public:
  explicit NumericalError(const std::string& msg) : Error(msg) {}
};

// File format or filesystem problems.
class IOError : public Error {
 public:
  explicit IOError(const std::string& msg) : Error(msg) {}
};

}  // namespace eit3d
