#pragma once

#include <stdexcept>
#include <string>

namespace sf2 {

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct DegenerateVector : Error {
  using Error::Error;
};
struct DimensionMismatch : Error {
  using Error::Error;
};
struct DomainError : Error {
  using Error::Error;
};
struct SingularDerivative : Error {
  using Error::Error;
};
struct LabelOutOfRange : Error {
  using Error::Error;
};
struct InvalidHyperparams : Error {
  using Error::Error;
};
struct InvalidPlan : Error {
  using Error::Error;
};
struct InsufficientData : Error {
  using Error::Error;
};
struct ConfigError : Error {
  using Error::Error;
};
struct IoError : Error {
  using Error::Error;
};

}  // namespace sf2
