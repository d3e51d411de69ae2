// SPDX-FileCopyrightText: (c) 2026 ckarank contributors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "ckarank/types.hpp"

namespace ckarank::numerics {

/// Relative singular-value cutoff used by pseudo_inverse / condition_number.
inline constexpr double kDefaultSingularTol = 1e-10;

/// Thin SVD of m: u has orthonormal columns, vt has orthonormal rows,
/// singular_values is non-negative and sorted descending.
/// u * singular_values.asDiagonal() * vt reconstructs m.
struct SvdResult {
  Matrix u;
  Vector singular_values;
  Matrix vt;

  Matrix reconstruct() const { return u * singular_values.asDiagonal() * vt; }
};

/// Subtracts each column mean; every output column sums to zero.
Matrix center_columns(const Matrix& m);

SvdResult svd(const Matrix& m);

/// Best Frobenius rank-r approximation (truncated SVD).
Matrix best_rank_r(const Matrix& m, Index r);

/// Moore-Penrose pseudo-inverse. Singular values below tol * sigma_max are
/// treated as zero.
Matrix pseudo_inverse(const Matrix& m, double tol = kDefaultSingularTol);

/// sigma_max / sigma_min over singular values above tol * sigma_max.
double condition_number(const Matrix& m, double tol = kDefaultSingularTol);

inline double frobenius_norm(const Matrix& m) { return m.norm(); }

}  // namespace ckarank::numerics
