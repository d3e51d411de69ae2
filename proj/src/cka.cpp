// SPDX-FileCopyrightText: (c) 2026 ckarank contributors
// SPDX-License-Identifier: Apache-2.0

#include "ckarank/cka.hpp"

#include <algorithm>
#include <cmath>

#include "ckarank/numerics.hpp"

namespace ckarank::cka {

void ActivationSet::validate() const {
  if (per_layer.empty()) throw ShapeError("ActivationSet: no layers");
  const Index n = per_layer.front().rows();
  for (std::size_t l = 0; l < per_layer.size(); ++l) {
    if (per_layer[l].rows() != n)
      throw ShapeError("ActivationSet: layer " + std::to_string(l + 1) +
                       " has " + std::to_string(per_layer[l].rows()) +
                       " samples, expected " + std::to_string(n));
    if (per_layer[l].cols() == 0)
      throw ShapeError("ActivationSet: layer " + std::to_string(l + 1) + " is empty");
  }
}

const char* regime_name(Regime r) {
  switch (r) {
    case Regime::Shallow: return "shallow";
    case Regime::Middle: return "middle";
    case Regime::Deep: return "deep";
  }
  return "shallow";
}

Regime regime_from_name(const std::string& name) {
  if (name == "shallow") return Regime::Shallow;
  if (name == "middle") return Regime::Middle;
  if (name == "deep") return Regime::Deep;
  throw ArgumentError("unknown regime name: " + name);
}

CkaBreakdown linear_cka(const Matrix& x, const Matrix& y) {
  require_shape(x.rows() == y.rows(), "linear_cka: sample counts differ");
  require_shape(x.rows() >= 2, "linear_cka: need at least 2 samples");

  const double n = static_cast<double>(x.rows());
  const double denom = (n - 1.0) * (n - 1.0);
  const Matrix xc = numerics::center_columns(x);
  const Matrix yc = numerics::center_columns(y);

  // trace(Kx Ky) = ||Yc^T Xc||_F^2 for linear kernels on centered features.
  CkaBreakdown out;
  out.hsic_xy = (yc.transpose() * xc).squaredNorm() / denom;
  out.hsic_xx = (xc.transpose() * xc).squaredNorm() / denom;
  out.hsic_yy = (yc.transpose() * yc).squaredNorm() / denom;

  if (out.hsic_xx <= 0.0 || out.hsic_yy <= 0.0)
    throw DegenerateInputError("linear_cka: constant input (zero after centering)");

  const double rho = out.hsic_xy / std::sqrt(out.hsic_xx * out.hsic_yy);
  out.rho = std::clamp(rho, 0.0, 1.0);
  return out;
}

CkaProfile profile(const ActivationSet& source, const ActivationSet& target) {
  source.validate();
  target.validate();
  require_shape(source.layer_count() == target.layer_count(),
                "profile: layer counts differ (" + std::to_string(source.layer_count()) +
                    " vs " + std::to_string(target.layer_count()) + ")");
  CkaProfile p;
  p.rho_per_layer.reserve(source.per_layer.size());
  for (std::size_t l = 0; l < source.per_layer.size(); ++l)
    p.rho_per_layer.push_back(linear_cka(source.per_layer[l], target.per_layer[l]).rho);
  return p;
}

ProfileStats profile_stats(const std::vector<CkaProfile>& profiles) {
  require(profiles.size() >= 2, "profile_stats: need at least 2 profiles");
  const std::size_t layers = profiles.front().rho_per_layer.size();
  for (const auto& p : profiles)
    require_shape(p.rho_per_layer.size() == layers, "profile_stats: profile lengths differ");

  ProfileStats stats;
  stats.seed_count = static_cast<int>(profiles.size());
  stats.mean_per_layer.resize(layers);
  stats.std_per_layer.resize(layers);
  const double n = static_cast<double>(profiles.size());
  for (std::size_t l = 0; l < layers; ++l) {
    double sum = 0.0;
    for (const auto& p : profiles) sum += p.rho_per_layer[l];
    const double mean = sum / n;
    double ss = 0.0;
    for (const auto& p : profiles) {
      const double d = p.rho_per_layer[l] - mean;
      ss += d * d;
    }
    stats.mean_per_layer[l] = mean;
    stats.std_per_layer[l] = std::sqrt(ss / (n - 1.0));
  }
  return stats;
}

Regime classify_value(double rho, double lower, double upper) {
  if (rho < lower) return Regime::Shallow;
  if (rho < upper) return Regime::Middle;
  return Regime::Deep;
}

std::vector<RegimeLabel> classify_regimes(const CkaProfile& profile, double lower,
                                          double upper) {
  require(0.0 <= lower && lower < upper && upper <= 1.0,
          "classify_regimes: thresholds must satisfy 0 <= lower < upper <= 1");
  std::vector<RegimeLabel> labels;
  labels.reserve(profile.rho_per_layer.size());
  for (double rho : profile.rho_per_layer)
    labels.push_back(RegimeLabel{classify_value(rho, lower, upper), lower, upper});
  return labels;
}

}  // namespace ckarank::cka
