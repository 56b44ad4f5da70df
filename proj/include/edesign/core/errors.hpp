#pragma once

#include <stdexcept>
#include <string>

namespace edesign {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class InvalidArgument : public Error {
 public:
  using Error::Error;
};

/// The final-bet growth equation has no root: the boundary is out of reach in one step.
class NoSolution : public Error {
 public:
  using Error::Error;
};

class AlreadyRejected : public Error {
 public:
  using Error::Error;
};

/// Even the power-maximizing policy cannot reach the requested power.
class InfeasibleConstraint : public Error {
 public:
  using Error::Error;
};

class NonConvergence : public Error {
 public:
  using Error::Error;
};

/// A policy was used with grids other than the ones it was solved on.
class GridMismatch : public Error {
 public:
  using Error::Error;
};

inline void require(bool condition, const std::string& message) {
  if (!condition) throw InvalidArgument(message);
}

}  // namespace edesign
