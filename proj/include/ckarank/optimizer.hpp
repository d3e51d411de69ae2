// SPDX-FileCopyrightText: (c) 2026 ckarank contributors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <vector>

#include "ckarank/types.hpp"

namespace ckarank::train {

struct TrainConfig {
  int epochs = 20;
  int batch_size = 8;
  double learning_rate = 1e-4;
  double weight_decay = 0.01;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps_opt = 1e-8;
  std::vector<std::uint64_t> seeds = {42, 123, 456, 789, 1024};

  void validate() const {
    require(learning_rate > 0.0, "TrainConfig: learning_rate must be positive");
    require(epochs >= 0 && batch_size >= 1, "TrainConfig: bad epochs/batch_size");
    require(!seeds.empty(), "TrainConfig: need at least one seed");
  }
};

/// View over one parameter tensor's raw storage.
struct ParamRef {
  double* data = nullptr;
  Index size = 0;
};

struct GradRef {
  const double* data = nullptr;
  Index size = 0;
};

/// AdamW with decoupled weight decay:
///   p <- p - lr * (m_hat / (sqrt(v_hat) + eps) + wd * p)
class AdamW {
 public:
  explicit AdamW(const TrainConfig& cfg) : cfg_(cfg) {}

  /// Parameter list must be identical (order and sizes) on every call.
  void step(const std::vector<ParamRef>& params, const std::vector<GradRef>& grads);

  int step_count() const { return t_; }

 private:
  TrainConfig cfg_;
  std::vector<Eigen::ArrayXd> m_, v_;
  int t_ = 0;
};

}  // namespace ckarank::train
