// SPDX-FileCopyrightText: (c) 2026 ckarank contributors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <vector>

#include "ckarank/nn.hpp"
#include "ckarank/types.hpp"

namespace ckarank::seg {

/// Gated fusion of RGB and depth feature maps. Feature maps are
/// location-major: one row per spatial location, one column per channel.
/// fused = W_f [F_rgb; F_d] + g (.) F_d with g = sigmoid(MLP([F_rgb; F_d]));
/// the gate is per location and per channel.
struct FusionParams {
  Matrix w_f;     // fused_width x (rgb_width + depth_width), no bias (linear map)
  Matrix w_g1;    // hidden x (rgb_width + depth_width)
  Vector b_g1;
  Matrix w_g2;    // fused_width x hidden
  Vector b_g2;

  void init(int rgb_width, int depth_width, int fused_width, Rng& rng, double stddev = 0.02);
  long long parameter_count() const;
};

struct FusionTrace {
  Matrix concat;       // T x (rgb+depth)
  Matrix hidden_pre;   // T x hidden (pre-GELU)
  Matrix hidden;       // T x hidden
  Matrix gate;         // T x fused
  Matrix f_d;          // T x depth
};

Matrix fuse(const Matrix& f_rgb, const Matrix& f_d, const FusionParams& params);

Matrix fuse_forward(const Matrix& f_rgb, const Matrix& f_d, const FusionParams& params,
                    FusionTrace& trace);

struct FusionGrads {
  Matrix w_f, w_g1, w_g2;
  Vector b_g1, b_g2;

  void init_like(const FusionParams& p);
  void accumulate(const FusionGrads& other);
};

/// Returns gradients w.r.t. f_rgb / f_d and accumulates parameter gradients.
void fuse_backward(const Matrix& dout, const FusionParams& params, const FusionTrace& trace,
                   FusionGrads& grads, Matrix& d_f_rgb, Matrix& d_f_d);

/// Three-layer conv stack turning a depth map into a feature grid matching
/// the encoder's token layout. The first conv stays frozen during adaptation.
struct DepthEncoder {
  nn::ConvLayer conv1;  // 1 -> c1, stride 2
  nn::ConvLayer conv2;  // c1 -> c2, stride 2
  nn::ConvLayer conv3;  // c2 -> out_width, stride 1

  void init(int out_width, Rng& rng, double stddev = 0.05);
  long long parameter_count() const;
  long long trainable_parameter_count() const;  // conv1 excluded
};

struct DepthTrace {
  std::vector<Matrix> in1, pre1, act1;
  std::vector<Matrix> pre2, act2;
  std::vector<Matrix> out;  // feature grid per channel
};

/// Depth map (H x W) -> feature matrix (T x out_width), row per grid cell.
Matrix depth_forward(const DepthEncoder& enc, const Matrix& depth, DepthTrace& trace);

struct DepthGrads {
  std::vector<Matrix> conv1_w, conv2_w, conv3_w;
  Vector conv1_b, conv2_b, conv3_b;

  void init_like(const DepthEncoder& enc);
  void accumulate(const DepthGrads& other);
};

void depth_backward(const DepthEncoder& enc, const DepthTrace& trace, const Matrix& dfeat,
                    DepthGrads& grads);

}  // namespace ckarank::seg
