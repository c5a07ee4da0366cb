#pragma once

#include <stdexcept>
#include <string>

namespace nbgof {

// Invalid argument or model parameter. CLI exit code 1.
class ParameterError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Malformed input file or unreachable output path. CLI exit code 2.
class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Iterative eigensolver did not reach the requested residual. CLI exit code 3.
class ConvergenceError : public std::runtime_error {
 public:
  ConvergenceError(const std::string& what, double best_residual)
      : std::runtime_error(what), best_residual_(best_residual) {}
  double best_residual() const { return best_residual_; }

 private:
  double best_residual_;
};

// Violated precondition on an in-memory argument (e.g. non-symmetric input).
class ContractError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

// Requested object would exceed a configured size cap.
class ResourceError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace nbgof
