#ifndef DISTCAUSE_ERRORS_HPP
#define DISTCAUSE_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace distcause {

// Bad inputs: malformed files, contract violations, impossible configs.
class ValidationError : public std::invalid_argument {
 public:
  explicit ValidationError(const std::string& msg) : std::invalid_argument(msg) {}
};

// Numeric failure at runtime: non-convergence, singular systems.
class NumericalError : public std::runtime_error {
 public:
  explicit NumericalError(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace distcause

#endif  // DISTCAUSE_ERRORS_HPP
