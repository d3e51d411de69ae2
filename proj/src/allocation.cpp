// SPDX-FileCopyrightText: (c) 2026 ckarank contributors
// SPDX-License-Identifier: Apache-2.0

#include "ckarank/allocation.hpp"

#include <algorithm>
#include <cmath>

#include "ckarank/numerics.hpp"

namespace ckarank::allocation {

void RankPlan::validate() const {
  require(!per_layer_rank.empty(), "RankPlan: empty plan");
  require(per_layer_regime.size() == per_layer_rank.size(),
          "RankPlan: regime/rank length mismatch");
  for (std::size_t l = 0; l < per_layer_rank.size(); ++l) {
    require(per_layer_rank[l] >= 1, "RankPlan: rank must be >= 1 at layer " +
                                        std::to_string(l + 1));
    const auto it = regime_ranks.find(per_layer_regime[l]);
    require(it != regime_ranks.end() && it->second == per_layer_rank[l],
            "RankPlan: per-layer rank inconsistent with regime map at layer " +
                std::to_string(l + 1));
  }
}

RankPlan allocate_ranks(const cka::CkaProfile& profile, RegimeThresholds thresholds,
                        const std::map<cka::Regime, int>& regime_ranks) {
  for (auto regime : {cka::Regime::Shallow, cka::Regime::Middle, cka::Regime::Deep}) {
    const auto it = regime_ranks.find(regime);
    require(it != regime_ranks.end(),
            std::string("allocate_ranks: missing rank for regime ") +
                cka::regime_name(regime));
    require(it->second >= 1, "allocate_ranks: ranks must be >= 1");
  }
  const auto labels = cka::classify_regimes(profile, thresholds.lower, thresholds.upper);

  RankPlan plan;
  plan.thresholds = thresholds;
  plan.regime_ranks = regime_ranks;
  plan.per_layer_rank.reserve(labels.size());
  plan.per_layer_regime.reserve(labels.size());
  for (const auto& lab : labels) {
    plan.per_layer_regime.push_back(lab.label);
    plan.per_layer_rank.push_back(regime_ranks.at(lab.label));
  }
  return plan;
}

RankPlan plan_from_regime_sizes(const std::array<int, 3>& sizes,
                                const std::array<int, 3>& ranks,
                                RegimeThresholds thresholds) {
  for (int s : sizes)
    if (s <= 0) throw ConfigError("plan_from_regime_sizes: every regime needs >= 1 layer");
  for (int r : ranks)
    if (r < 1) throw ConfigError("plan_from_regime_sizes: ranks must be >= 1");

  RankPlan plan;
  plan.thresholds = thresholds;
  plan.regime_ranks = {{cka::Regime::Shallow, ranks[0]},
                       {cka::Regime::Middle, ranks[1]},
                       {cka::Regime::Deep, ranks[2]}};
  const std::array<cka::Regime, 3> regimes = {cka::Regime::Shallow, cka::Regime::Middle,
                                              cka::Regime::Deep};
  for (int g = 0; g < 3; ++g)
    for (int i = 0; i < sizes[g]; ++i) {
      plan.per_layer_regime.push_back(regimes[g]);
      plan.per_layer_rank.push_back(ranks[g]);
    }
  return plan;
}

RankPlan shift_plan_boundaries(const RankPlan& plan, int offset) {
  std::array<int, 3> sizes = {0, 0, 0};
  for (auto regime : plan.per_layer_regime) sizes[static_cast<int>(regime)] += 1;
  sizes[0] += offset;
  sizes[2] -= offset;
  for (int s : sizes)
    if (s <= 0)
      throw ConfigError("shift_plan_boundaries: shift " + std::to_string(offset) +
                        " collapses a regime to zero layers");
  const std::array<int, 3> ranks = {plan.regime_ranks.at(cka::Regime::Shallow),
                                    plan.regime_ranks.at(cka::Regime::Middle),
                                    plan.regime_ranks.at(cka::Regime::Deep)};
  return plan_from_regime_sizes(sizes, ranks, plan.thresholds);
}

long long count_trainable_params(const RankPlan& plan, EncoderDims dims,
                                 long long extras) {
  require(dims.d_model >= 1, "count_trainable_params: d_model must be >= 1");
  long long total = 0;
  const long long din_plus_dout = 2LL * dims.d_model;
  for (int r : plan.per_layer_rank) total += 4LL * r * din_plus_dout;
  return total + extras;
}

int theoretical_rank_bound(int d, double rho, double kappa_x, double kappa_y,
                           double eps, double constant) {
  require(d >= 0, "theoretical_rank_bound: d must be >= 0");
  require(rho >= 0.0 && rho <= 1.0, "theoretical_rank_bound: rho must be in [0,1]");
  require(eps > 0.0, "theoretical_rank_bound: eps must be positive");
  require(kappa_x >= 1.0 && kappa_y >= 1.0,
          "theoretical_rank_bound: condition numbers must be >= 1");
  const double raw = constant * static_cast<double>(d) * (1.0 - rho) * kappa_x *
                     kappa_y / eps;
  const auto r = static_cast<long long>(std::ceil(raw - 1e-12));
  return static_cast<int>(std::clamp<long long>(r, 0, d));
}

AlignerResult optimal_aligner(const Matrix& x, const Matrix& y, double tol) {
  require_shape(x.cols() == y.cols(), "optimal_aligner: sample counts differ");
  require_shape(x.cols() >= 1, "optimal_aligner: no samples");

  AlignerResult out;
  out.feature_dim = x.rows();

  const Matrix gram_x = x * x.transpose();
  const Matrix gram_y = y * y.transpose();

  const auto sv = numerics::svd(gram_x).singular_values;
  out.used_pseudo_inverse = sv(sv.size() - 1) <= tol * sv(0);

  out.w_star = y * x.transpose() * numerics::pseudo_inverse(gram_x, tol);
  out.kappa_x = numerics::condition_number(gram_x, tol);
  out.kappa_y = numerics::condition_number(gram_y, tol);
  out.residual_at_rank = truncation_residuals(out.w_star);
  return out;
}

std::vector<double> truncation_residuals(const Matrix& m) {
  const Vector s = numerics::svd(m).singular_values;
  const Index k = s.size();
  // Tail sums accumulated from the smallest value up for accuracy.
  std::vector<double> res(static_cast<std::size_t>(k) + 1, 0.0);
  double tail = 0.0;
  for (Index r = k; r-- > 0;) {
    tail += s(r) * s(r);
    res[static_cast<std::size_t>(r)] = std::sqrt(tail);
  }
  return res;
}

int required_rank_empirical(const AlignerResult& aligner, double eps,
                            RankTargetMode mode) {
  require(eps > 0.0, "required_rank_empirical: eps must be positive");
  std::vector<double> residuals;
  if (mode == RankTargetMode::ApproximateWStar) {
    residuals = aligner.residual_at_rank;
  } else {
    require_shape(aligner.w_star.rows() == aligner.w_star.cols(),
                  "required_rank_empirical: W* - I needs a square aligner");
    const Matrix target =
        aligner.w_star - Matrix::Identity(aligner.w_star.rows(), aligner.w_star.cols());
    residuals = truncation_residuals(target);
  }
  for (std::size_t r = 0; r < residuals.size(); ++r)
    if (residuals[r] <= eps) return static_cast<int>(r);
  return static_cast<int>(residuals.size()) - 1;
}

SpectralDecayFit fit_spectral_decay(const std::vector<double>& singular_values) {
  std::vector<double> logs;
  std::vector<double> logi;
  for (std::size_t i = 0; i < singular_values.size(); ++i) {
    if (singular_values[i] > 0.0) {
      logs.push_back(std::log(singular_values[i]));
      logi.push_back(std::log(static_cast<double>(logs.size())));
    }
  }
  if (logs.size() < 3)
    throw NumericError("fit_spectral_decay: need at least 3 strictly positive values");

  const double n = static_cast<double>(logs.size());
  double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < logs.size(); ++i) {
    sx += logi[i];
    sy += logs[i];
    sxx += logi[i] * logi[i];
    sxy += logi[i] * logs[i];
  }
  const double denom = n * sxx - sx * sx;
  if (denom == 0.0) throw NumericError("fit_spectral_decay: degenerate abscissa");
  const double slope = (n * sxy - sx * sy) / denom;
  const double intercept = (sy - slope * sx) / n;

  SpectralDecayFit fit;
  fit.alpha = -slope;
  fit.c = std::exp(intercept);
  double ss = 0.0;
  for (std::size_t i = 0; i < logs.size(); ++i) {
    const double pred = intercept + slope * logi[i];
    ss += (logs[i] - pred) * (logs[i] - pred);
  }
  fit.fit_residual = std::sqrt(ss / n);
  fit.alpha_exceeds_half = fit.alpha > 0.5;
  return fit;
}

}  // namespace ckarank::allocation
