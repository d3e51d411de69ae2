// SPDX-FileCopyrightText: (c) 2026 ckarank contributors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <vector>

#include "ckarank/types.hpp"

namespace ckarank::stats {

struct TTestResult {
  double mean = 0.0;
  double stddev = 0.0;   // sample std (n-1)
  double t = 0.0;
  double p = 1.0;        // two-sided
  double ci_lo = 0.0;    // 95% CI on the mean difference
  double ci_hi = 0.0;
  int dof = 0;
  bool degenerate = false;  // zero variance
};

struct HolmResult {
  std::vector<bool> reject;       // original order
  std::vector<double> adjusted_p; // original order
};

double mean(const std::vector<double>& v);
double sample_std(const std::vector<double>& v);

/// Regularized incomplete beta I_x(a, b).
double incomplete_beta(double a, double b, double x);

/// Two-sided Student-t survival: P(|T| >= |t|) with dof degrees of freedom.
double student_t_two_sided_p(double t, int dof);

/// 97.5% quantile of Student t (for 95% CIs).
double student_t_quantile_975(int dof);

/// Paired t-test on per-seed differences. Zero variance is flagged
/// degenerate with p = 0 if the mean is nonzero, else p = 1.
TTestResult paired_t_test(const std::vector<double>& deltas);

/// Holm-Bonferroni step-down correction at level alpha.
HolmResult holm_bonferroni(const std::vector<double>& p_values, double alpha);

/// Spearman rank correlation with average ranks for ties.
double spearman(const std::vector<double>& a, const std::vector<double>& b);

}  // namespace ckarank::stats
