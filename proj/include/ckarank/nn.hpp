// SPDX-FileCopyrightText: (c) 2026 ckarank contributors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cmath>
#include <vector>

#include "ckarank/rng.hpp"
#include "ckarank/types.hpp"

namespace ckarank::nn {

inline constexpr double kGeluCoeff = 0.044715;

inline double gelu(double x) {
  const double c = std::sqrt(2.0 / M_PI);
  return 0.5 * x * (1.0 + std::tanh(c * (x + kGeluCoeff * x * x * x)));
}

inline double gelu_grad(double x) {
  const double c = std::sqrt(2.0 / M_PI);
  const double u = c * (x + kGeluCoeff * x * x * x);
  const double t = std::tanh(u);
  const double du = c * (1.0 + 3.0 * kGeluCoeff * x * x);
  return 0.5 * (1.0 + t) + 0.5 * x * (1.0 - t * t) * du;
}

inline Matrix gelu(const Matrix& x) { return x.unaryExpr([](double v) { return gelu(v); }); }

inline Matrix gelu_grad(const Matrix& x) {
  return x.unaryExpr([](double v) { return gelu_grad(v); });
}

inline double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

inline Matrix sigmoid(const Matrix& x) {
  return x.unaryExpr([](double v) { return sigmoid(v); });
}

/// Row-wise layer norm with affine parameters. Rows are tokens.
struct LayerNormTrace {
  Matrix x_hat;     // normalized input
  Vector inv_std;   // per-row 1/sqrt(var + eps)
};

inline constexpr double kLayerNormEps = 1e-5;

inline Matrix layernorm_forward(const Matrix& x, const Vector& gamma, const Vector& beta,
                                LayerNormTrace& trace) {
  const Index rows = x.rows(), cols = x.cols();
  trace.x_hat.resize(rows, cols);
  trace.inv_std.resize(rows);
  Matrix out(rows, cols);
  for (Index r = 0; r < rows; ++r) {
    const double mean = x.row(r).mean();
    const double var = (x.row(r).array() - mean).square().mean();
    const double inv = 1.0 / std::sqrt(var + kLayerNormEps);
    trace.inv_std(r) = inv;
    for (Index c = 0; c < cols; ++c) {
      const double xh = (x(r, c) - mean) * inv;
      trace.x_hat(r, c) = xh;
      out(r, c) = xh * gamma(c) + beta(c);
    }
  }
  return out;
}

/// Backward pass; accumulates parameter gradients, returns gradient w.r.t. x.
inline Matrix layernorm_backward(const Matrix& dout, const Vector& gamma,
                                 const LayerNormTrace& trace, Vector& dgamma,
                                 Vector& dbeta) {
  const Index rows = dout.rows(), cols = dout.cols();
  Matrix dx(rows, cols);
  for (Index c = 0; c < cols; ++c) {
    dgamma(c) += (dout.col(c).array() * trace.x_hat.col(c).array()).sum();
    dbeta(c) += dout.col(c).sum();
  }
  const double inv_cols = 1.0 / static_cast<double>(cols);
  for (Index r = 0; r < rows; ++r) {
    double sum_dxhat = 0.0, sum_dxhat_xhat = 0.0;
    for (Index c = 0; c < cols; ++c) {
      const double dxhat = dout(r, c) * gamma(c);
      sum_dxhat += dxhat;
      sum_dxhat_xhat += dxhat * trace.x_hat(r, c);
    }
    for (Index c = 0; c < cols; ++c) {
      const double dxhat = dout(r, c) * gamma(c);
      dx(r, c) = trace.inv_std(r) *
                 (dxhat - inv_cols * sum_dxhat - trace.x_hat(r, c) * inv_cols * sum_dxhat_xhat);
    }
  }
  return dx;
}

/// 3x3 convolution with padding 1. Channels are stored as a vector of HxW
/// matrices; weights are [out][in] 3x3 blocks.
struct ConvLayer {
  int in_channels = 1;
  int out_channels = 1;
  int stride = 1;
  std::vector<Matrix> weights;  // out_channels * in_channels entries, each 3x3
  Vector bias;

  Matrix& w(int out, int in) { return weights[out * in_channels + in]; }
  const Matrix& w(int out, int in) const { return weights[out * in_channels + in]; }

  void init(int in_ch, int out_ch, int stride_, Rng& rng, double stddev) {
    in_channels = in_ch;
    out_channels = out_ch;
    stride = stride_;
    weights.assign(static_cast<std::size_t>(in_ch) * out_ch, Matrix());
    for (int o = 0; o < out_ch; ++o)
      for (int i = 0; i < in_ch; ++i) w(o, i) = gaussian_matrix(rng, 3, 3, 0.0, stddev);
    bias = Vector::Zero(out_ch);
  }

  std::vector<Matrix> forward(const std::vector<Matrix>& input) const;

  /// dinput is resized and filled; weight/bias gradients are accumulated.
  std::vector<Matrix> backward(const std::vector<Matrix>& input,
                               const std::vector<Matrix>& dout,
                               std::vector<Matrix>& dweights, Vector& dbias) const;

  long long parameter_count() const {
    return static_cast<long long>(in_channels) * out_channels * 9 + out_channels;
  }
};

}  // namespace ckarank::nn
