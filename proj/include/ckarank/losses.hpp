// SPDX-FileCopyrightText: (c) 2026 ckarank contributors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "ckarank/types.hpp"

namespace ckarank::seg {

struct LossWeights {
  double lambda_edge = 0.5;
  double dice_smooth = 1.0;
};

struct LossTerms {
  double dice = 0.0;
  double bce = 0.0;
  double edge = 0.0;
  double total = 0.0;
};

struct SegMetrics {
  double miou = 0.0;
  double boundary_f1 = 0.0;
};

/// Probabilities are clamped to [kProbClamp, 1 - kProbClamp] inside the
/// cross-entropy terms; gradients vanish outside the clamp band.
inline constexpr double kProbClamp = 1e-7;

double dice_loss(const Matrix& pred, const Matrix& target, double smooth);
double bce_loss(const Matrix& pred, const Matrix& target);

/// Binary edge band of a mask: Sobel gradient magnitude > 0 computed where
/// the 3x3 kernel fits (border pixels stay zero), then dilated so a straight
/// step edge reaches the requested band width (the raw Sobel band is 2 wide).
Matrix sobel_edges(const Matrix& mask, int width = 2);

/// BCE restricted to the edge band of the target mask; 0 when the band is empty.
double edge_loss(const Matrix& pred, const Matrix& target_mask, int width = 2);

LossTerms total_loss(const Matrix& pred, const Matrix& target, const LossWeights& weights);

/// Same as total_loss but also accumulates d total / d pred into dpred.
LossTerms total_loss_with_grad(const Matrix& pred, const Matrix& target,
                               const LossWeights& weights, Matrix& dpred);

Matrix dice_loss_grad(const Matrix& pred, const Matrix& target, double smooth);
Matrix bce_loss_grad(const Matrix& pred, const Matrix& target);
Matrix edge_loss_grad(const Matrix& pred, const Matrix& target_mask, int width = 2);

/// Mean IoU over non-background classes (label 0 is background). Classes
/// absent from both maps are skipped; throws NumericError when no
/// non-background class is present at all.
double miou(const MatrixI& pred_mask, const MatrixI& target_mask, int class_count);

/// F1 of boundary pixels matched within tol_px Chebyshev distance,
/// bidirectional. Two empty boundaries score 1.
double boundary_f1(const MatrixI& pred_mask, const MatrixI& target_mask, int tol_px = 2);

}  // namespace ckarank::seg
