#pragma once

#include <stdexcept>
#include <string>

namespace psrom {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed or topologically invalid centerline documents.
class TreeValidationError : public Error {
 public:
  using Error::Error;
};

// A requested geometry lies outside [patient, ideal].
class EnvelopeError : public Error {
 public:
  using Error::Error;
};

// A full-order solve failed to converge; `label` names the configuration.
class ConvergenceError : public Error {
 public:
  ConvergenceError(std::string label, const std::string& what)
      : Error(what), label_(std::move(label)) {}
  const std::string& label() const noexcept { return label_; }

 private:
  std::string label_;
};

}  // namespace psrom
