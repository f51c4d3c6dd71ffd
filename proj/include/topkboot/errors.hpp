#pragma once

#include <stdexcept>
#include <string>

namespace topkboot {

// Input outside an operation's documented domain (bad index, empty sample,
// invalid configuration value).
class domain_error : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// An iterative routine failed to reach its tolerance; carries the final
// residual so callers can decide whether the partial result is usable.
class numeric_error : public std::runtime_error {
 public:
  numeric_error(const std::string& what, double residual)
      : std::runtime_error(what), residual_(residual) {}
  double residual() const noexcept { return residual_; }

 private:
  double residual_ = 0.0;
};

// The request is valid but exceeds what this implementation supports
// (size caps, rank conditions).
class capability_error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace topkboot
