// SPDX-FileCopyrightText: (c) 2026 ckarank contributors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <string>
#include <vector>

#include "ckarank/types.hpp"

namespace ckarank::cka {

/// Per-layer activations for one domain. Each matrix is n x p_l with one row
/// per sample (images are mean-pooled over tokens upstream). Layers are
/// 1-based and contiguous: per_layer[0] is layer 1.
struct ActivationSet {
  std::vector<Matrix> per_layer;
  std::string source_tag;

  Index layer_count() const { return static_cast<Index>(per_layer.size()); }
  Index sample_count() const { return per_layer.empty() ? 0 : per_layer.front().rows(); }
  void validate() const;
};

/// Linear-CKA value together with the three HSIC terms it is built from.
struct CkaBreakdown {
  double hsic_xy = 0.0;
  double hsic_xx = 0.0;
  double hsic_yy = 0.0;
  double rho = 0.0;
};

struct CkaProfile {
  std::vector<double> rho_per_layer;

  Index layer_count() const { return static_cast<Index>(rho_per_layer.size()); }
};

/// Per-layer mean and sample standard deviation (n-1 denominator) over seeds.
struct ProfileStats {
  std::vector<double> mean_per_layer;
  std::vector<double> std_per_layer;
  int seed_count = 0;
};

enum class Regime { Shallow, Middle, Deep };

const char* regime_name(Regime r);
Regime regime_from_name(const std::string& name);

struct RegimeLabel {
  Regime label = Regime::Shallow;
  double lower_threshold = 0.0;
  double upper_threshold = 1.0;
};

/// Default regime thresholds: shallow below lower, deep at or above upper.
inline constexpr double kDefaultLowerThreshold = 0.5;
inline constexpr double kDefaultUpperThreshold = 0.7;

/// Linear CKA between two activation matrices (rows are paired samples).
/// Columns are centered first; HSIC is the biased trace estimator, evaluated
/// through the cross-covariance form ||Yc^T Xc||_F^2 / (n-1)^2.
/// Throws DegenerateInputError when either input is constant after centering.
CkaBreakdown linear_cka(const Matrix& x, const Matrix& y);

/// Layer-wise CKA between two activation sets of equal depth.
CkaProfile profile(const ActivationSet& source, const ActivationSet& target);

ProfileStats profile_stats(const std::vector<CkaProfile>& profiles);

std::vector<RegimeLabel> classify_regimes(const CkaProfile& profile, double lower,
                                          double upper);

Regime classify_value(double rho, double lower, double upper);

}  // namespace ckarank::cka
