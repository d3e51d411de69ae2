// SPDX-FileCopyrightText: (c) 2026 ckarank contributors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <vector>

#include "ckarank/data.hpp"
#include "ckarank/encoder.hpp"
#include "ckarank/fusion.hpp"
#include "ckarank/losses.hpp"

namespace ckarank::model {

/// Full segmentation pipeline: frozen-backbone ViT with LoRA adapters,
/// depth conv stack, gated fusion, and a per-token upsampling head.
struct SegModel {
  encoder::EncoderState enc;
  seg::DepthEncoder depth;
  seg::FusionParams fusion;
  Matrix head_w;  // patch_size^2 x d_model
  Vector head_b;
  bool use_depth = true;

  long long head_parameter_count() const { return head_w.size() + head_b.size(); }

  /// Trainable parameters outside the adapters (depth conv2/3, fusion, head).
  long long extras_parameter_count() const;
};

SegModel build_model(const encoder::EncoderConfig& cfg, const allocation::RankPlan& plan);

/// Replaces the adapters according to plan, reseeded; frozen weights and
/// heads are untouched. B factors start at zero.
void attach_adapters(SegModel& model, const allocation::RankPlan& plan, std::uint64_t seed);

struct BatchTrace {
  encoder::ForwardTrace enc_trace;
  std::vector<seg::DepthTrace> depth_traces;
  std::vector<seg::FusionTrace> fusion_traces;
  std::vector<Matrix> fused;   // per image, T x d
  std::vector<Matrix> logits;  // per image, H x W
  std::vector<Matrix> probs;   // per image, H x W
};

/// Forward over a batch of samples; probabilities per image.
std::vector<Matrix> model_forward(const SegModel& model, const std::vector<data::Sample>& batch,
                                  bool apply_adapters, BatchTrace* trace = nullptr);

struct ModelGrads {
  encoder::EncoderGrads enc;
  seg::DepthGrads depth;
  seg::FusionGrads fusion;
  Matrix head_w;
  Vector head_b;

  void init_like(const SegModel& model);
};

/// Backward from d(loss)/d(probability map) per image.
void model_backward(const SegModel& model, const std::vector<data::Sample>& batch,
                    const BatchTrace& trace, const std::vector<Matrix>& dprobs,
                    bool apply_adapters, ModelGrads& grads);

/// Mean per-image metrics over a dataset, plus the transparent-analog split.
struct EvalResult {
  seg::SegMetrics overall;
  seg::SegMetrics transparent;
  seg::SegMetrics opaque;
  int transparent_count = 0;
  int opaque_count = 0;
};

EvalResult evaluate(const SegModel& model, const data::Dataset& dataset,
                    bool apply_adapters = true);

/// Evaluation with adapters enabled only in selected layers (attribution study).
EvalResult evaluate_masked(const SegModel& model, const data::Dataset& dataset,
                           const std::vector<bool>& adapter_enabled_per_layer);

/// Per-layer CKA activations on a batch (token-mean pooled rows).
cka::ActivationSet extract_activations(const SegModel& model, const data::Dataset& dataset,
                                       bool apply_adapters, const std::string& tag);

}  // namespace ckarank::model
