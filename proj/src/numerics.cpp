// SPDX-FileCopyrightText: (c) 2026 ckarank contributors
// SPDX-License-Identifier: Apache-2.0

#include "ckarank/numerics.hpp"

#include <Eigen/SVD>

namespace ckarank::numerics {

namespace {

void check_input(const Matrix& m, const char* op) {
  if (m.rows() == 0 || m.cols() == 0)
    throw ShapeError(std::string(op) + ": empty matrix");
  if (!m.allFinite()) throw NumericError(std::string(op) + ": non-finite entries");
}

}  // namespace

Matrix center_columns(const Matrix& m) {
  check_input(m, "center_columns");
  return m.rowwise() - m.colwise().mean();
}

SvdResult svd(const Matrix& m) {
  check_input(m, "svd");
  Eigen::JacobiSVD<Matrix> solver(m, Eigen::ComputeThinU | Eigen::ComputeThinV);
  if (solver.info() != Eigen::Success)
    throw NumericError("svd: Jacobi iteration did not converge");
  return SvdResult{solver.matrixU(), solver.singularValues(),
                   solver.matrixV().transpose()};
}

Matrix best_rank_r(const Matrix& m, Index r) {
  check_input(m, "best_rank_r");
  const Index k = std::min(m.rows(), m.cols());
  if (r < 0 || r > k)
    throw ArgumentError("best_rank_r: rank " + std::to_string(r) +
                        " out of range [0, " + std::to_string(k) + "]");
  if (r == 0) return Matrix::Zero(m.rows(), m.cols());
  const SvdResult s = svd(m);
  return s.u.leftCols(r) * s.singular_values.head(r).asDiagonal() * s.vt.topRows(r);
}

Matrix pseudo_inverse(const Matrix& m, double tol) {
  check_input(m, "pseudo_inverse");
  require(tol > 0.0, "pseudo_inverse: tol must be positive");
  const SvdResult s = svd(m);
  const double cutoff = tol * s.singular_values(0);
  Vector inv = Vector::Zero(s.singular_values.size());
  for (Index i = 0; i < inv.size(); ++i)
    if (s.singular_values(i) > cutoff) inv(i) = 1.0 / s.singular_values(i);
  return s.vt.transpose() * inv.asDiagonal() * s.u.transpose();
}

double condition_number(const Matrix& m, double tol) {
  check_input(m, "condition_number");
  require(tol > 0.0, "condition_number: tol must be positive");
  const SvdResult s = svd(m);
  const double smax = s.singular_values(0);
  if (smax == 0.0) throw NumericError("condition_number: zero matrix");
  double smin = smax;
  for (Index i = 0; i < s.singular_values.size(); ++i) {
    const double v = s.singular_values(i);
    if (v > tol * smax) smin = v;
  }
  return smax / smin;
}

}  // namespace ckarank::numerics
