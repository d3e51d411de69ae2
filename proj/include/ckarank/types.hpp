// SPDX-FileCopyrightText: (c) 2026 ckarank contributors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <Eigen/Dense>
#include <stdexcept>
#include <string>

namespace ckarank {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using MatrixI = Eigen::MatrixXi;
using Index = Eigen::Index;

/// Base class for all library errors.
class Error : public std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Mismatched or empty dimensions.
class ShapeError : public Error {
  using Error::Error;
};

/// Invalid argument values (thresholds out of order, missing keys, ...).
class ArgumentError : public Error {
  using Error::Error;
};

/// Numeric failure: NaN/Inf inputs, non-convergence, undefined metrics.
class NumericError : public Error {
  using Error::Error;
};

/// Degenerate input whose similarity denominator vanishes.
class DegenerateInputError : public NumericError {
  using NumericError::NumericError;
};

/// File-format or filesystem failure.
class IoError : public Error {
  using Error::Error;
};

/// Bad command-line usage or run configuration.
class ConfigError : public ArgumentError {
  using ArgumentError::ArgumentError;
};

inline void require(bool cond, const std::string& msg) {
  if (!cond) throw ArgumentError(msg);
}

inline void require_shape(bool cond, const std::string& msg) {
  if (!cond) throw ShapeError(msg);
}

inline bool all_finite(const Matrix& m) { return m.allFinite(); }

}  // namespace ckarank
