#pragma once

#include <stdexcept>
#include <string>

namespace matconc {

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A spectral function or bound was asked to act outside its domain
/// (e.g. log of a singular matrix, threshold not positive definite).
class DomainError : public Error {
 public:
  using Error::Error;
};

class DimMismatch : public Error {
 public:
  using Error::Error;
};

/// Parameters supplied do not match the selected MGF row or builder.
class ParamMismatch : public Error {
 public:
  using Error::Error;
};

/// A betting fraction fell outside the interval that keeps E_n PSD.
class GammaOutOfRange : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

class PreconditionFailed : public Error {
 public:
  using Error::Error;
};

/// The bound's assumptions are not satisfied by the chosen generator.
class IncompatiblePair : public Error {
 public:
  using Error::Error;
};

class AssumptionViolated : public Error {
 public:
  using Error::Error;
};

}  // namespace matconc
