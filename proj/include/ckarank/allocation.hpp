// SPDX-FileCopyrightText: (c) 2026 ckarank contributors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <map>
#include <vector>

#include "ckarank/cka.hpp"
#include "ckarank/types.hpp"

namespace ckarank::allocation {

struct RegimeThresholds {
  double lower = cka::kDefaultLowerThreshold;
  double upper = cka::kDefaultUpperThreshold;
};

/// Width of the attention projections; Q/K/V/O are d_model x d_model.
struct EncoderDims {
  int d_model = 32;
};

/// Per-layer adapter ranks derived from a CKA profile.
struct RankPlan {
  std::vector<int> per_layer_rank;
  RegimeThresholds thresholds;
  std::map<cka::Regime, int> regime_ranks;
  std::vector<cka::Regime> per_layer_regime;
  long long total_trainable = 0;  // filled once encoder dims are known

  Index layer_count() const { return static_cast<Index>(per_layer_rank.size()); }
  void validate() const;
};

/// Optimal linear aligner W* = Y X^T (X X^T)^+ together with its truncation
/// residuals. x and y are feature-major (d x n): rows are dimensions,
/// columns are paired samples.
struct AlignerResult {
  Matrix w_star;
  Index feature_dim = 0;            // rows of x
  double kappa_x = 1.0;             // condition number of X X^T
  double kappa_y = 1.0;
  std::vector<double> residual_at_rank;  // Frobenius error of rank-r truncation, r = 0..min dim
  bool used_pseudo_inverse = false;      // X X^T was numerically singular
};

/// Least-squares fit of log(lambda_i) = log C - alpha log i.
struct SpectralDecayFit {
  double c = 0.0;
  double alpha = 0.0;
  double fit_residual = 0.0;  // RMS residual in log space
  bool alpha_exceeds_half = false;
};

enum class RankTargetMode { ApproximateWStar, ApproximateWStarMinusI };

RankPlan allocate_ranks(const cka::CkaProfile& profile, RegimeThresholds thresholds,
                        const std::map<cka::Regime, int>& regime_ranks);

/// Builds a plan directly from contiguous regime sizes (shallow, middle, deep).
/// Used by the experiment suites and the boundary-shift study.
RankPlan plan_from_regime_sizes(const std::array<int, 3>& sizes,
                                const std::array<int, 3>& ranks,
                                RegimeThresholds thresholds = {});

/// Shifts both regime boundaries by `offset` layers (positive = deeper).
/// Throws ConfigError when a regime collapses to zero layers.
RankPlan shift_plan_boundaries(const RankPlan& plan, int offset);

/// Adapter parameters for Q/K/V/O: sum over layers of 4 * r * (d_in + d_out),
/// plus `extras` (fusion / depth / decoder heads). Exact integer arithmetic.
long long count_trainable_params(const RankPlan& plan, EncoderDims dims,
                                 long long extras = 0);

/// ceil(constant * d * (1 - rho) * kappa_x * kappa_y / eps), clamped to [0, d].
int theoretical_rank_bound(int d, double rho, double kappa_x, double kappa_y,
                           double eps, double constant = 1.0);

AlignerResult optimal_aligner(const Matrix& x, const Matrix& y,
                              double tol = 1e-10);

/// Smallest rank r whose truncation residual is <= eps, for W* or W* - I.
int required_rank_empirical(const AlignerResult& aligner, double eps,
                            RankTargetMode mode);

SpectralDecayFit fit_spectral_decay(const std::vector<double>& singular_values);

/// Residual curve sqrt(sum_{i>r} sigma_i^2) for r = 0..k of an arbitrary matrix.
std::vector<double> truncation_residuals(const Matrix& m);

}  // namespace ckarank::allocation
