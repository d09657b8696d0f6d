#pragma once

#include <stdexcept>
#include <string>

namespace mixfbm {

// Bad arguments or an inadmissible parameter set.
class DomainError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// A numerical target (tolerance, convergence) was not met.
class AccuracyError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class IllConditioned : public AccuracyError {
 public:
  IllConditioned(const std::string& what, double cond)
      : AccuracyError(what), condition(cond) {}
  double condition;
};

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace mixfbm
