// SPDX-FileCopyrightText: (c) 2026 ckarank contributors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <vector>

#include "ckarank/encoder.hpp"
#include "ckarank/types.hpp"

namespace ckarank::data {

enum class Domain { Source, Target };

/// RGB-only corruption applied in the Target domain. Geometry (masks and
/// depth) is shared with the paired Source scene.
struct CorruptionConfig {
  double noise_std = 0.0;
  int blur_radius = 0;
  double contrast_jitter = 0.0;

  bool is_zero() const { return noise_std == 0.0 && blur_radius == 0 && contrast_jitter == 0.0; }
};

struct SyntheticTaskConfig {
  int image_size = 32;
  int min_objects = 2;
  int max_objects = 4;
  Domain domain = Domain::Source;
  CorruptionConfig corruption;
  bool includes_transparent_analog = true;
  std::uint64_t seed = 0;

  void validate() const;
};

/// One rendered scene. Masks are exact geometry; depth carries sensor-style
/// noise and dropout holes that are identical across the paired domains.
struct Sample {
  encoder::RgbImage rgb;
  Matrix depth;
  MatrixI mask;  // 0 background, 1 object
  bool has_transparent = false;
};

struct Dataset {
  std::vector<Sample> samples;
  SyntheticTaskConfig config;

  int size() const { return static_cast<int>(samples.size()); }
};

/// Deterministic given (cfg.seed, n). The same seed produces the same scene
/// geometry in both domains; only the RGB corruption stream differs.
Dataset generate_dataset(const SyntheticTaskConfig& cfg, int n);

/// Default Target corruption used by the experiment suites.
CorruptionConfig default_target_corruption();

}  // namespace ckarank::data
