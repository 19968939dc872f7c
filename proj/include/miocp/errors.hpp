#ifndef MIOCP_ERRORS_HPP
#define MIOCP_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace miocp {

/// Bad input data: dimension mismatches, violated preconditions, malformed
/// configuration. Maps to CLI exit code 2.
class ValidationError : public std::runtime_error {
 public:
  explicit ValidationError(const std::string& what) : std::runtime_error(what) {}
};

/// Failure discovered while computing: non-finite states, unbounded growth,
/// empty admissible sets. Maps to CLI exit code 3.
class NumericalError : public std::runtime_error {
 public:
  explicit NumericalError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace miocp

#endif
