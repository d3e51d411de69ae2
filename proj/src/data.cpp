// SPDX-FileCopyrightText: (c) 2026 ckarank contributors
// SPDX-License-Identifier: Apache-2.0

#include "ckarank/data.hpp"

#include <algorithm>
#include <cmath>

namespace ckarank::data {

void SyntheticTaskConfig::validate() const {
  require(image_size >= 16, "SyntheticTaskConfig: image_size too small");
  require(min_objects >= 1 && max_objects >= min_objects,
          "SyntheticTaskConfig: invalid object count range");
  if (domain == Domain::Source)
    require(corruption.is_zero(), "SyntheticTaskConfig: Source corruption must be zero");
  else
    require(!corruption.is_zero(), "SyntheticTaskConfig: Target corruption must be positive");
  require(corruption.noise_std >= 0.0 && corruption.blur_radius >= 0 &&
              corruption.contrast_jitter >= 0.0,
          "SyntheticTaskConfig: corruption fields must be non-negative");
}

CorruptionConfig default_target_corruption() { return CorruptionConfig{0.22, 1, 0.25}; }

namespace {

struct ObjectSpec {
  bool is_circle = false;
  int kind = 0;  // 0 normal, 1 transparent, 2 flat
  int cx = 0, cy = 0, radius = 0;
  double depth = 0.0;
  double alpha = 1.0;  // blend factor for transparent objects
  std::array<double, 3> color = {0, 0, 0};
};

bool inside(const ObjectSpec& o, int r, int c) {
  if (o.is_circle) {
    const double dr = r - o.cy, dc = c - o.cx;
    return dr * dr + dc * dc <= static_cast<double>(o.radius) * o.radius;
  }
  return std::abs(r - o.cy) <= o.radius && std::abs(c - o.cx) <= o.radius;
}

Matrix box_blur(const Matrix& m, int radius) {
  const Index h = m.rows(), w = m.cols();
  Matrix out(h, w);
  for (Index r = 0; r < h; ++r)
    for (Index c = 0; c < w; ++c) {
      double acc = 0.0;
      int count = 0;
      for (Index dr = -radius; dr <= radius; ++dr)
        for (Index dc = -radius; dc <= radius; ++dc) {
          const Index rr = r + dr, cc = c + dc;
          if (rr >= 0 && rr < h && cc >= 0 && cc < w) {
            acc += m(rr, cc);
            ++count;
          }
        }
      out(r, c) = acc / count;
    }
  return out;
}

Sample render_scene(const SyntheticTaskConfig& cfg, std::uint64_t scene_tag) {
  const int n = cfg.image_size;
  // Three independent streams: scene geometry/appearance, depth sensor noise,
  // RGB corruption. The first two are shared by the paired domains.
  Rng geo(mix_seed(cfg.seed, scene_tag * 4 + 0));
  Rng depth_rng(mix_seed(cfg.seed, scene_tag * 4 + 1));
  Rng corrupt(mix_seed(cfg.seed, scene_tag * 4 + 2));

  Sample s;
  s.mask = MatrixI::Zero(n, n);
  s.depth = Matrix::Zero(n, n);

  // Background: smooth ramp plus fine texture.
  std::array<double, 3> base{};
  std::array<double, 3> ramp_x{}, ramp_y{};
  for (int c = 0; c < 3; ++c) {
    base[c] = geo.uniform(0.3, 0.6);
    ramp_x[c] = geo.uniform(-0.15, 0.15);
    ramp_y[c] = geo.uniform(-0.15, 0.15);
  }
  for (int c = 0; c < 3; ++c) {
    s.rgb[c].resize(n, n);
    for (int r = 0; r < n; ++r)
      for (int col = 0; col < n; ++col) {
        const double fx = static_cast<double>(col) / (n - 1) - 0.5;
        const double fy = static_cast<double>(r) / (n - 1) - 0.5;
        s.rgb[c](r, col) = std::clamp(
            base[c] + ramp_x[c] * fx + ramp_y[c] * fy + geo.uniform(-0.03, 0.03), 0.0, 1.0);
      }
  }

  const double bg_mean = (base[0] + base[1] + base[2]) / 3.0;
  const int count = geo.uniform_int(cfg.min_objects, cfg.max_objects);
  for (int i = 0; i < count; ++i) {
    ObjectSpec o;
    o.is_circle = geo.uniform() < 0.5;
    const double kind_draw = geo.uniform();
    if (kind_draw < 0.4)
      o.kind = cfg.includes_transparent_analog ? 1 : 0;
    else if (kind_draw < 0.6)
      o.kind = 2;
    else
      o.kind = 0;
    o.radius = geo.uniform_int(3, 6);
    const int lo = o.radius + 2, hi = n - 1 - o.radius - 2;
    o.cx = geo.uniform_int(lo, hi);
    o.cy = geo.uniform_int(lo, hi);

    if (o.kind == 1) {
      // Transparent analog: color close to the background, heavy bleed-through.
      for (int c = 0; c < 3; ++c)
        o.color[c] = std::clamp(base[c] + geo.uniform(-0.1, 0.1), 0.0, 1.0);
      o.alpha = geo.uniform(0.15, 0.3);
      o.depth = geo.uniform(0.45, 0.95);
      s.has_transparent = true;
    } else {
      // Opaque: enforce contrast against the background mean.
      for (int c = 0; c < 3; ++c) o.color[c] = geo.uniform(0.0, 1.0);
      double m = (o.color[0] + o.color[1] + o.color[2]) / 3.0;
      if (std::abs(m - bg_mean) < 0.25) {
        const double push = bg_mean < 0.5 ? 0.35 : -0.35;
        for (int c = 0; c < 3; ++c) o.color[c] = std::clamp(o.color[c] + push, 0.0, 1.0);
      }
      o.alpha = 1.0;
      // Flat objects sit at background depth: invisible to the depth sensor.
      o.depth = o.kind == 2 ? 0.0 : geo.uniform(0.45, 0.95);
    }

    for (int r = 0; r < n; ++r)
      for (int col = 0; col < n; ++col)
        if (inside(o, r, col)) {
          s.mask(r, col) = 1;
          for (int c = 0; c < 3; ++c)
            s.rgb[c](r, col) = o.alpha * o.color[c] + (1.0 - o.alpha) * s.rgb[c](r, col);
          s.depth(r, col) = std::max(s.depth(r, col), o.depth);
        }
  }

  // Depth sensor model: additive noise plus dropout holes, shared across the
  // paired domains.
  for (int r = 0; r < n; ++r)
    for (int col = 0; col < n; ++col) {
      double d = s.depth(r, col) + depth_rng.normal(0.0, 0.05);
      if (depth_rng.uniform() < 0.04) d = 0.0;
      s.depth(r, col) = std::clamp(d, 0.0, 1.0);
    }

  if (cfg.domain == Domain::Target) {
    const auto& cor = cfg.corruption;
    const double contrast = 1.0 + cor.contrast_jitter * corrupt.uniform(-1.0, 1.0);
    for (int c = 0; c < 3; ++c) {
      Matrix& ch = s.rgb[c];
      ch = 0.5 + contrast * (ch.array() - 0.5);
      if (cor.blur_radius > 0) ch = box_blur(ch, cor.blur_radius);
      if (cor.noise_std > 0.0)
        for (int r = 0; r < n; ++r)
          for (int col = 0; col < n; ++col)
            ch(r, col) += corrupt.normal(0.0, cor.noise_std);
      ch = ch.array().min(1.0).max(0.0);
    }
  }
  return s;
}

}  // namespace

Dataset generate_dataset(const SyntheticTaskConfig& cfg, int n) {
  cfg.validate();
  require(n >= 1, "generate_dataset: n must be >= 1");
  Dataset out;
  out.config = cfg;
  out.samples.reserve(n);
  for (int i = 0; i < n; ++i)
    out.samples.push_back(render_scene(cfg, static_cast<std::uint64_t>(i)));
  return out;
}

}  // namespace ckarank::data
