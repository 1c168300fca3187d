#pragma once

#include <stdexcept>
#include <string>

namespace schedlab {

// Invalid configuration, spec, grid or argument shape. Maps to CLI exit code 2.
class ValidationError : public std::invalid_argument {
 public:
  explicit ValidationError(const std::string& what) : std::invalid_argument(what) {}
};

// Evaluation outside the mathematical domain (t outside [0, T], alpha_bar at
// 0 or 1 where a predictor is undefined, negative DDIM variance). Exit code 3.
class DomainError : public std::domain_error {
 public:
  explicit DomainError(const std::string& what) : std::domain_error(what) {}
};

// File system failures. Exit code 4.
class IoError : public std::runtime_error {
 public:
  explicit IoError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace schedlab
