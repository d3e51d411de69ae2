// SPDX-FileCopyrightText: (c) 2026 ckarank contributors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "ckarank/allocation.hpp"
#include "ckarank/cka.hpp"
#include "ckarank/nn.hpp"
#include "ckarank/types.hpp"

namespace ckarank::encoder {

/// One RGB image as three HxW channel planes in [0, 1].
using RgbImage = std::array<Matrix, 3>;

struct EncoderConfig {
  int layer_count = 8;
  int d_model = 32;
  int head_count = 4;
  int patch_size = 4;
  int image_size = 32;
  std::uint64_t seed = 42;

  int grid() const { return image_size / patch_size; }
  int token_count() const { return grid() * grid(); }
  int patch_dim() const { return patch_size * patch_size * 3; }
  int head_dim() const { return d_model / head_count; }
  void validate() const;
};

/// Low-rank update for one frozen projection: effective weight is
/// W + (alpha / rank) * B * A. B starts at zero so the initial update
/// is exactly zero.
struct LoraAdapter {
  Matrix a;  // rank x d_in
  Matrix b;  // d_out x rank
  int rank = 0;
  double alpha = 0.0;

  double scaling() const { return alpha / static_cast<double>(rank); }
  Matrix update() const { return scaling() * b * a; }
};

/// alpha = 2r keeps alpha/rank rank-independent.
inline double default_alpha(int rank) { return 2.0 * rank; }

enum class Projection { Q = 0, K = 1, V = 2, O = 3 };

struct BlockWeights {
  Vector ln1_gamma, ln1_beta;
  Matrix wq, wk, wv, wo;  // d_model x d_model
  Vector bq, bk, bv, bo;
  Vector ln2_gamma, ln2_beta;
  Matrix w1;  // hidden x d_model (hidden = 4 * d_model)
  Vector b1;
  Matrix w2;  // d_model x hidden
  Vector b2;
};

struct FrozenWeights {
  Matrix patch_w;  // d_model x patch_dim
  Vector patch_b;
  Matrix pos;      // token_count x d_model
  std::vector<BlockWeights> blocks;
  Vector final_ln_gamma, final_ln_beta;

  long long parameter_count() const;
};

struct EncoderState {
  EncoderConfig cfg;
  FrozenWeights frozen;
  std::vector<std::array<LoraAdapter, 4>> adapters;  // [layer][projection]
  allocation::RankPlan plan;

  long long adapter_parameter_count() const;
};

EncoderState build_encoder(const EncoderConfig& cfg, const allocation::RankPlan& plan);

/// Standalone adapted projection: columns of x are input vectors.
/// Returns W x + (alpha/r) B (A x).
Matrix adapted_projection(const Matrix& w_frozen, const LoraAdapter& adapter,
                          const Matrix& x);

struct LayerTrace {
  Matrix x_in;   // (B*T) x d
  nn::LayerNormTrace ln1, ln2;
  Matrix xn1;
  Matrix q, k, v;
  std::vector<Matrix> attn;  // per (image, head) softmax probabilities, T x T
  Matrix ctx;
  Matrix x_mid;
  Matrix xn2;
  Matrix h_pre;
  Matrix h_act;
  Matrix wq_eff, wk_eff, wv_eff, wo_eff;
};

struct ForwardTrace {
  int batch = 0;
  Matrix patches;  // (B*T) x patch_dim
  std::vector<LayerTrace> layers;
  Matrix x_final_pre;
  nn::LayerNormTrace final_ln;
};

struct ForwardResult {
  cka::ActivationSet activations;  // per layer: batch x d_model (token-mean pooled)
  Matrix features;                 // (B*T) x d_model after the final layer norm
};

/// Forward pass over a batch. When trace is non-null every intermediate is
/// recorded for backward. apply_adapters = false runs the frozen backbone.
ForwardResult forward(const EncoderState& state, const std::vector<RgbImage>& images,
                      bool apply_adapters = true, ForwardTrace* trace = nullptr);

/// Regime gating used by the attribution study: apply adapters only in the
/// given layers (1-based indices).
ForwardResult forward_masked(const EncoderState& state, const std::vector<RgbImage>& images,
                             const std::vector<bool>& adapter_enabled_per_layer);

struct BlockGrads {
  Vector ln1_gamma, ln1_beta;
  Matrix wq, wk, wv, wo;  // gradients w.r.t. the EFFECTIVE projections
  Vector bq, bk, bv, bo;
  Vector ln2_gamma, ln2_beta;
  Matrix w1;
  Vector b1;
  Matrix w2;
  Vector b2;
};

struct AdapterGrads {
  Matrix a;
  Matrix b;
};

struct EncoderGrads {
  Matrix patch_w;
  Vector patch_b;
  Matrix pos;
  std::vector<BlockGrads> blocks;
  Vector final_ln_gamma, final_ln_beta;
  std::vector<std::array<AdapterGrads, 4>> adapters;

  void init_like(const EncoderState& state);
};

/// Backward from d(features); fills grads (accumulating) and derives adapter
/// factor gradients from the effective-projection gradients.
void backward(const EncoderState& state, const ForwardTrace& trace, const Matrix& dfeatures,
              bool apply_adapters, EncoderGrads& grads);

/// Flat view over the adapter factors (A and B, per layer, Q/K/V/O order).
struct TrainableView {
  std::vector<Matrix*> factors;
  long long count = 0;
};

TrainableView trainable_parameters(EncoderState& state);

/// FNV-1a over the frozen weights bytes; freeze-contract checks.
std::uint64_t frozen_weights_hash(const EncoderState& state);

}  // namespace ckarank::encoder
