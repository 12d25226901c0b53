#pragma once

#include <stdexcept>
#include <string>

namespace rtnq {

/// Invalid model parameters or malformed inputs (bad alpha, empty ensemble, ...).
class ParameterError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Argument outside the support of a function (e.g. a rate outside [gamma_min, gamma_max]).
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// A numerical routine did not reach its target accuracy.
class NumericError : public std::runtime_error {
 public:
  NumericError(const std::string& what, double achieved_tolerance)
      : std::runtime_error(what), achieved_(achieved_tolerance) {}

  double achieved_tolerance() const noexcept { return achieved_; }

 private:
  double achieved_;
};

}  // namespace rtnq
