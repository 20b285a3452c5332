// Copyright (c) opmm contributors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <stdexcept>
#include <string>

#include <Eigen/Core>

namespace opmm {

using Index = Eigen::Index;

template <typename Scalar>
using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

template <typename Scalar>
using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class DimensionMismatch : public Error {
 public:
  DimensionMismatch(const std::string& where, Index expected, Index got)
      : Error(where + ": expected dimension " + std::to_string(expected) +
              ", got " + std::to_string(got)) {}
};

class UnsupportedMetricSetPair : public Error {
 public:
  using Error::Error;
};

class InfeasiblePoint : public Error {
 public:
  using Error::Error;
};

class StrategyAssumptionViolation : public Error {
 public:
  using Error::Error;
};

class InvalidArgument : public Error {
 public:
  using Error::Error;
};

/// Raised by the iterative solvers when the iteration budget runs out. Carries
/// the best iterate seen and its stationarity residual.
template <typename Scalar>
class MaxItersExceeded : public Error {
 public:
  MaxItersExceeded(const std::string& what, Vector<Scalar> best,
                   Scalar residual)
      : Error(what), best_{std::move(best)}, residual_{residual} {}

  const Vector<Scalar>& best() const { return best_; }
  Scalar residual() const { return residual_; }

 private:
  Vector<Scalar> best_;
  Scalar residual_;
};

/// Componentwise positive part [v]₊.
template <typename Derived>
auto positive_part(const Eigen::MatrixBase<Derived>& v) {
  return v.cwiseMax(typename Derived::Scalar(0));
}

}  // namespace opmm
