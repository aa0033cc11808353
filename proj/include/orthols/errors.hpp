#pragma once

#include <stdexcept>
#include <string>

namespace orthols {

/// Base class for all failures raised by the library.
class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

class ShapeMismatch : public Error {
public:
  using Error::Error;
};

class NonFiniteInput : public Error {
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

class NotOrthonormal : public Error {
public:
  using Error::Error;
};

class NotSymmetric : public Error {
public:
  using Error::Error;
};

/// Raised when a step-size routine is handed a direction with <grad, D> >= 0.
class NonDescentDirection : public Error {
public:
  using Error::Error;
};

/// The backtracking loop hit its iteration cap.
class MaxBacktracks : public Error {
public:
  using Error::Error;
};

/// Estimator input outside the region where the acceptable interval is defined
/// (current energy above the non-monotone reference value).
class InvalidReference : public Error {
public:
  using Error::Error;
};

} // namespace orthols
