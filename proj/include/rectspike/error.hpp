#pragma once

#include <stdexcept>
#include <string>

namespace rectspike {

/// Base of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// An argument lies outside the domain where the quantity is defined.
class DomainError : public Error {
 public:
  using Error::Error;
};

/// A spike strength is on the wrong side of the phase transition for the
/// requested quantity.
class OutOfRange : public Error {
 public:
  using Error::Error;
};

class NonConvergence : public Error {
 public:
  using Error::Error;
};

class InvalidSpec : public Error {
 public:
  using Error::Error;
};

class NegativeVariance : public Error {
 public:
  using Error::Error;
};

class DimensionError : public Error {
 public:
  using Error::Error;
};

class RankDeficient : public Error {
 public:
  using Error::Error;
};

class ConvergenceFailure : public Error {
 public:
  using Error::Error;
};

/// The evaluation point of a shifted solve is too close to a singular value.
class NearSingularShift : public Error {
 public:
  using Error::Error;
};

class UnknownTheta : public Error {
 public:
  using Error::Error;
};

/// Malformed configuration document or measure literal.
class ConfigError : public Error {
 public:
  using Error::Error;
};

}  // namespace rectspike
