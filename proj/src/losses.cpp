// SPDX-FileCopyrightText: (c) 2026 ckarank contributors
// SPDX-License-Identifier: Apache-2.0

#include "ckarank/losses.hpp"

#include <algorithm>
#include <cmath>

namespace ckarank::seg {

namespace {

void check_same_shape(const Matrix& a, const Matrix& b, const char* op) {
  require_shape(a.rows() == b.rows() && a.cols() == b.cols(),
                std::string(op) + ": shape mismatch");
  require_shape(a.size() > 0, std::string(op) + ": empty input");
}

double clamp_prob(double p) { return std::clamp(p, kProbClamp, 1.0 - kProbClamp); }

double bce_term(double p, double t) {
  const double q = clamp_prob(p);
  return -(t * std::log(q) + (1.0 - t) * std::log(1.0 - q));
}

double bce_term_grad(double p, double t) {
  if (p <= kProbClamp || p >= 1.0 - kProbClamp) return 0.0;
  return -t / p + (1.0 - t) / (1.0 - p);
}

Matrix dilate_chebyshev(const Matrix& m, int rounds) {
  Matrix cur = m;
  const Index h = m.rows(), w = m.cols();
  for (int round = 0; round < rounds; ++round) {
    Matrix next = cur;
    for (Index r = 0; r < h; ++r)
      for (Index c = 0; c < w; ++c) {
        if (cur(r, c) == 0.0) continue;
        for (Index dr = -1; dr <= 1; ++dr)
          for (Index dc = -1; dc <= 1; ++dc) {
            const Index rr = r + dr, cc = c + dc;
            if (rr >= 0 && rr < h && cc >= 0 && cc < w) next(rr, cc) = 1.0;
          }
      }
    cur = next;
  }
  return cur;
}

}  // namespace

double dice_loss(const Matrix& pred, const Matrix& target, double smooth) {
  check_same_shape(pred, target, "dice_loss");
  const double inter = (pred.array() * target.array()).sum();
  const double denom = pred.sum() + target.sum() + smooth;
  return 1.0 - (2.0 * inter + smooth) / denom;
}

Matrix dice_loss_grad(const Matrix& pred, const Matrix& target, double smooth) {
  check_same_shape(pred, target, "dice_loss_grad");
  const double num = 2.0 * (pred.array() * target.array()).sum() + smooth;
  const double denom = pred.sum() + target.sum() + smooth;
  return ((num - 2.0 * target.array() * denom) / (denom * denom)).matrix();
}

double bce_loss(const Matrix& pred, const Matrix& target) {
  check_same_shape(pred, target, "bce_loss");
  double sum = 0.0;
  for (Index r = 0; r < pred.rows(); ++r)
    for (Index c = 0; c < pred.cols(); ++c) sum += bce_term(pred(r, c), target(r, c));
  return sum / static_cast<double>(pred.size());
}

Matrix bce_loss_grad(const Matrix& pred, const Matrix& target) {
  check_same_shape(pred, target, "bce_loss_grad");
  Matrix g(pred.rows(), pred.cols());
  const double inv_n = 1.0 / static_cast<double>(pred.size());
  for (Index r = 0; r < pred.rows(); ++r)
    for (Index c = 0; c < pred.cols(); ++c)
      g(r, c) = bce_term_grad(pred(r, c), target(r, c)) * inv_n;
  return g;
}

Matrix sobel_edges(const Matrix& mask, int width) {
  require(width >= 1, "sobel_edges: width must be >= 1");
  const Index h = mask.rows(), w = mask.cols();
  Matrix edges = Matrix::Zero(h, w);
  for (Index r = 1; r + 1 < h; ++r)
    for (Index c = 1; c + 1 < w; ++c) {
      const double gx = (mask(r - 1, c + 1) + 2.0 * mask(r, c + 1) + mask(r + 1, c + 1)) -
                        (mask(r - 1, c - 1) + 2.0 * mask(r, c - 1) + mask(r + 1, c - 1));
      const double gy = (mask(r + 1, c - 1) + 2.0 * mask(r + 1, c) + mask(r + 1, c + 1)) -
                        (mask(r - 1, c - 1) + 2.0 * mask(r - 1, c) + mask(r - 1, c + 1));
      if (gx * gx + gy * gy > 0.0) edges(r, c) = 1.0;
    }
  // Raw step support is 2 pixels; each dilation round adds one on each side.
  const int rounds = std::max(0, (width - 1) / 2);
  return rounds > 0 ? dilate_chebyshev(edges, rounds) : edges;
}

double edge_loss(const Matrix& pred, const Matrix& target_mask, int width) {
  check_same_shape(pred, target_mask, "edge_loss");
  const Matrix band = sobel_edges(target_mask, width);
  const double count = band.sum();
  if (count == 0.0) return 0.0;
  double sum = 0.0;
  for (Index r = 0; r < pred.rows(); ++r)
    for (Index c = 0; c < pred.cols(); ++c)
      if (band(r, c) != 0.0) sum += bce_term(pred(r, c), target_mask(r, c));
  return sum / count;
}

Matrix edge_loss_grad(const Matrix& pred, const Matrix& target_mask, int width) {
  check_same_shape(pred, target_mask, "edge_loss_grad");
  const Matrix band = sobel_edges(target_mask, width);
  Matrix g = Matrix::Zero(pred.rows(), pred.cols());
  const double count = band.sum();
  if (count == 0.0) return g;
  for (Index r = 0; r < pred.rows(); ++r)
    for (Index c = 0; c < pred.cols(); ++c)
      if (band(r, c) != 0.0)
        g(r, c) = bce_term_grad(pred(r, c), target_mask(r, c)) / count;
  return g;
}

LossTerms total_loss(const Matrix& pred, const Matrix& target, const LossWeights& weights) {
  require(weights.lambda_edge >= 0.0 && std::isfinite(weights.lambda_edge),
          "total_loss: lambda must be finite and >= 0");
  LossTerms t;
  t.dice = dice_loss(pred, target, weights.dice_smooth);
  t.bce = bce_loss(pred, target);
  t.edge = edge_loss(pred, target);
  t.total = t.dice + t.bce + weights.lambda_edge * t.edge;
  return t;
}

LossTerms total_loss_with_grad(const Matrix& pred, const Matrix& target,
                               const LossWeights& weights, Matrix& dpred) {
  const LossTerms t = total_loss(pred, target, weights);
  dpred = dice_loss_grad(pred, target, weights.dice_smooth) + bce_loss_grad(pred, target) +
          weights.lambda_edge * edge_loss_grad(pred, target);
  return t;
}

double miou(const MatrixI& pred_mask, const MatrixI& target_mask, int class_count) {
  require_shape(pred_mask.rows() == target_mask.rows() &&
                    pred_mask.cols() == target_mask.cols(),
                "miou: shape mismatch");
  require(class_count >= 2, "miou: need at least background + one class");
  double sum = 0.0;
  int used = 0;
  for (int cls = 1; cls < class_count; ++cls) {
    long long inter = 0, uni = 0;
    for (Index r = 0; r < pred_mask.rows(); ++r)
      for (Index c = 0; c < pred_mask.cols(); ++c) {
        const bool p = pred_mask(r, c) == cls;
        const bool t = target_mask(r, c) == cls;
        inter += (p && t) ? 1 : 0;
        uni += (p || t) ? 1 : 0;
      }
    if (uni == 0) continue;
    sum += static_cast<double>(inter) / static_cast<double>(uni);
    used += 1;
  }
  if (used == 0)
    throw NumericError("miou: no non-background class present in either mask");
  return sum / static_cast<double>(used);
}

namespace {

Matrix boundary_pixels(const MatrixI& mask) {
  const Index h = mask.rows(), w = mask.cols();
  Matrix b = Matrix::Zero(h, w);
  for (Index r = 0; r < h; ++r)
    for (Index c = 0; c < w; ++c) {
      const int v = mask(r, c);
      const bool diff = (r > 0 && mask(r - 1, c) != v) || (r + 1 < h && mask(r + 1, c) != v) ||
                        (c > 0 && mask(r, c - 1) != v) || (c + 1 < w && mask(r, c + 1) != v);
      if (diff) b(r, c) = 1.0;
    }
  return b;
}

double match_fraction(const Matrix& from, const Matrix& to, int tol_px) {
  const Matrix to_dilated = dilate_chebyshev(to, tol_px);
  double matched = 0.0, total = 0.0;
  for (Index r = 0; r < from.rows(); ++r)
    for (Index c = 0; c < from.cols(); ++c)
      if (from(r, c) != 0.0) {
        total += 1.0;
        if (to_dilated(r, c) != 0.0) matched += 1.0;
      }
  return total == 0.0 ? 0.0 : matched / total;
}

}  // namespace

double boundary_f1(const MatrixI& pred_mask, const MatrixI& target_mask, int tol_px) {
  require_shape(pred_mask.rows() == target_mask.rows() &&
                    pred_mask.cols() == target_mask.cols(),
                "boundary_f1: shape mismatch");
  require(tol_px >= 0, "boundary_f1: tolerance must be >= 0");
  const Matrix bp = boundary_pixels(pred_mask);
  const Matrix bt = boundary_pixels(target_mask);
  const bool pred_empty = bp.sum() == 0.0;
  const bool target_empty = bt.sum() == 0.0;
  if (pred_empty && target_empty) return 1.0;
  if (pred_empty || target_empty) return 0.0;
  const double precision = match_fraction(bp, bt, tol_px);
  const double recall = match_fraction(bt, bp, tol_px);
  if (precision + recall == 0.0) return 0.0;
  return 2.0 * precision * recall / (precision + recall);
}

}  // namespace ckarank::seg
