// SPDX-FileCopyrightText: (c) 2026 ckarank contributors
// SPDX-License-Identifier: Apache-2.0

#include "ckarank/fusion.hpp"

namespace ckarank::nn {

std::vector<Matrix> ConvLayer::forward(const std::vector<Matrix>& input) const {
  require_shape(static_cast<int>(input.size()) == in_channels,
                "ConvLayer: channel count mismatch");
  const Index h = input[0].rows(), w = input[0].cols();
  const Index oh = (h + 2 - 3) / stride + 1;
  const Index ow = (w + 2 - 3) / stride + 1;
  std::vector<Matrix> out(out_channels, Matrix::Zero(oh, ow));
  for (int o = 0; o < out_channels; ++o) {
    Matrix& dst = out[o];
    dst.setConstant(bias(o));
    for (int i = 0; i < in_channels; ++i) {
      const Matrix& src = input[i];
      const Matrix& k = this->w(o, i);
      for (Index r = 0; r < oh; ++r)
        for (Index c = 0; c < ow; ++c) {
          const Index r0 = r * stride - 1, c0 = c * stride - 1;
          double acc = 0.0;
          for (Index kr = 0; kr < 3; ++kr)
            for (Index kc = 0; kc < 3; ++kc) {
              const Index rr = r0 + kr, cc = c0 + kc;
              if (rr >= 0 && rr < h && cc >= 0 && cc < w) acc += k(kr, kc) * src(rr, cc);
            }
          dst(r, c) += acc;
        }
    }
  }
  return out;
}

std::vector<Matrix> ConvLayer::backward(const std::vector<Matrix>& input,
                                        const std::vector<Matrix>& dout,
                                        std::vector<Matrix>& dweights, Vector& dbias) const {
  const Index h = input[0].rows(), w = input[0].cols();
  const Index oh = dout[0].rows(), ow = dout[0].cols();
  std::vector<Matrix> dinput(in_channels, Matrix::Zero(h, w));
  for (int o = 0; o < out_channels; ++o) {
    dbias(o) += dout[o].sum();
    for (int i = 0; i < in_channels; ++i) {
      const Matrix& src = input[i];
      const Matrix& k = this->w(o, i);
      Matrix& dk = dweights[static_cast<std::size_t>(o) * in_channels + i];
      Matrix& din = dinput[i];
      for (Index r = 0; r < oh; ++r)
        for (Index c = 0; c < ow; ++c) {
          const double g = dout[o](r, c);
          if (g == 0.0) continue;
          const Index r0 = r * stride - 1, c0 = c * stride - 1;
          for (Index kr = 0; kr < 3; ++kr)
            for (Index kc = 0; kc < 3; ++kc) {
              const Index rr = r0 + kr, cc = c0 + kc;
              if (rr >= 0 && rr < h && cc >= 0 && cc < w) {
                dk(kr, kc) += g * src(rr, cc);
                din(rr, cc) += g * k(kr, kc);
              }
            }
        }
    }
  }
  return dinput;
}

}  // namespace ckarank::nn

namespace ckarank::seg {

void FusionParams::init(int rgb_width, int depth_width, int fused_width, Rng& rng,
                        double stddev) {
  require(fused_width == depth_width,
          "FusionParams: gate width must match depth width for g (.) F_d");
  const int concat_width = rgb_width + depth_width;
  w_f = gaussian_matrix(rng, fused_width, concat_width, 0.0, stddev);
  w_g1 = gaussian_matrix(rng, fused_width, concat_width, 0.0, stddev);
  b_g1 = Vector::Zero(fused_width);
  w_g2 = gaussian_matrix(rng, fused_width, fused_width, 0.0, stddev);
  b_g2 = Vector::Zero(fused_width);
}

long long FusionParams::parameter_count() const {
  return static_cast<long long>(w_f.size()) + w_g1.size() + b_g1.size() + w_g2.size() +
         b_g2.size();
}

Matrix fuse_forward(const Matrix& f_rgb, const Matrix& f_d, const FusionParams& params,
                    FusionTrace& trace) {
  require_shape(f_rgb.rows() == f_d.rows(), "fuse: spatial sizes differ");
  require_shape(f_rgb.cols() + f_d.cols() == params.w_f.cols(),
                "fuse: concat width does not match W_f");
  require_shape(f_d.cols() == params.w_g2.rows(), "fuse: gate width does not match F_d");

  trace.concat.resize(f_rgb.rows(), f_rgb.cols() + f_d.cols());
  trace.concat << f_rgb, f_d;
  trace.f_d = f_d;
  trace.hidden_pre = trace.concat * params.w_g1.transpose();
  trace.hidden_pre.rowwise() += params.b_g1.transpose();
  trace.hidden = nn::gelu(trace.hidden_pre);
  Matrix gate_pre = trace.hidden * params.w_g2.transpose();
  gate_pre.rowwise() += params.b_g2.transpose();
  trace.gate = nn::sigmoid(gate_pre);

  return trace.concat * params.w_f.transpose() + trace.gate.cwiseProduct(f_d);
}

Matrix fuse(const Matrix& f_rgb, const Matrix& f_d, const FusionParams& params) {
  FusionTrace trace;
  return fuse_forward(f_rgb, f_d, params, trace);
}

void FusionGrads::init_like(const FusionParams& p) {
  w_f = Matrix::Zero(p.w_f.rows(), p.w_f.cols());
  w_g1 = Matrix::Zero(p.w_g1.rows(), p.w_g1.cols());
  w_g2 = Matrix::Zero(p.w_g2.rows(), p.w_g2.cols());
  b_g1 = Vector::Zero(p.b_g1.size());
  b_g2 = Vector::Zero(p.b_g2.size());
}

void FusionGrads::accumulate(const FusionGrads& other) {
  w_f += other.w_f;
  w_g1 += other.w_g1;
  w_g2 += other.w_g2;
  b_g1 += other.b_g1;
  b_g2 += other.b_g2;
}

void fuse_backward(const Matrix& dout, const FusionParams& params, const FusionTrace& trace,
                   FusionGrads& grads, Matrix& d_f_rgb, Matrix& d_f_d) {
  const Index rgb_width = params.w_f.cols() - trace.f_d.cols();

  // Linear branch: fused += concat * W_f^T.
  grads.w_f += dout.transpose() * trace.concat;
  Matrix dconcat = dout * params.w_f;

  // Gate product branch: fused += gate (.) f_d.
  Matrix dgate = dout.cwiseProduct(trace.f_d);
  Matrix d_fd_direct = dout.cwiseProduct(trace.gate);

  // Through the sigmoid and the two-layer MLP.
  Matrix dgate_pre = dgate.cwiseProduct(
      trace.gate.unaryExpr([](double g) { return g * (1.0 - g); }));
  grads.w_g2 += dgate_pre.transpose() * trace.hidden;
  grads.b_g2 += dgate_pre.colwise().sum().transpose();
  Matrix dhidden = dgate_pre * params.w_g2;
  Matrix dhidden_pre = dhidden.cwiseProduct(nn::gelu_grad(trace.hidden_pre));
  grads.w_g1 += dhidden_pre.transpose() * trace.concat;
  grads.b_g1 += dhidden_pre.colwise().sum().transpose();
  dconcat += dhidden_pre * params.w_g1;

  d_f_rgb = dconcat.leftCols(rgb_width);
  d_f_d = dconcat.rightCols(trace.f_d.cols()) + d_fd_direct;
}

void DepthEncoder::init(int out_width, Rng& rng, double stddev) {
  conv1.init(1, 8, 2, rng, stddev);
  conv2.init(8, 16, 2, rng, stddev);
  conv3.init(16, out_width, 1, rng, stddev);
}

long long DepthEncoder::parameter_count() const {
  return conv1.parameter_count() + conv2.parameter_count() + conv3.parameter_count();
}

long long DepthEncoder::trainable_parameter_count() const {
  return conv2.parameter_count() + conv3.parameter_count();
}

Matrix depth_forward(const DepthEncoder& enc, const Matrix& depth, DepthTrace& trace) {
  trace.in1 = {depth};
  trace.pre1 = enc.conv1.forward(trace.in1);
  trace.act1.resize(trace.pre1.size());
  for (std::size_t i = 0; i < trace.pre1.size(); ++i) trace.act1[i] = nn::gelu(trace.pre1[i]);
  trace.pre2 = enc.conv2.forward(trace.act1);
  trace.act2.resize(trace.pre2.size());
  for (std::size_t i = 0; i < trace.pre2.size(); ++i) trace.act2[i] = nn::gelu(trace.pre2[i]);
  trace.out = enc.conv3.forward(trace.act2);

  const Index gh = trace.out[0].rows(), gw = trace.out[0].cols();
  Matrix feat(gh * gw, static_cast<Index>(trace.out.size()));
  for (std::size_t ch = 0; ch < trace.out.size(); ++ch)
    for (Index r = 0; r < gh; ++r)
      for (Index c = 0; c < gw; ++c) feat(r * gw + c, static_cast<Index>(ch)) = trace.out[ch](r, c);
  return feat;
}

void DepthGrads::init_like(const DepthEncoder& enc) {
  auto zeros_like = [](const nn::ConvLayer& l) {
    return std::vector<Matrix>(l.weights.size(), Matrix::Zero(3, 3));
  };
  conv1_w = zeros_like(enc.conv1);
  conv2_w = zeros_like(enc.conv2);
  conv3_w = zeros_like(enc.conv3);
  conv1_b = Vector::Zero(enc.conv1.out_channels);
  conv2_b = Vector::Zero(enc.conv2.out_channels);
  conv3_b = Vector::Zero(enc.conv3.out_channels);
}

void DepthGrads::accumulate(const DepthGrads& other) {
  for (std::size_t i = 0; i < conv1_w.size(); ++i) conv1_w[i] += other.conv1_w[i];
  for (std::size_t i = 0; i < conv2_w.size(); ++i) conv2_w[i] += other.conv2_w[i];
  for (std::size_t i = 0; i < conv3_w.size(); ++i) conv3_w[i] += other.conv3_w[i];
  conv1_b += other.conv1_b;
  conv2_b += other.conv2_b;
  conv3_b += other.conv3_b;
}

void depth_backward(const DepthEncoder& enc, const DepthTrace& trace, const Matrix& dfeat,
                    DepthGrads& grads) {
  const Index gh = trace.out[0].rows(), gw = trace.out[0].cols();
  std::vector<Matrix> dout(trace.out.size(), Matrix::Zero(gh, gw));
  for (std::size_t ch = 0; ch < trace.out.size(); ++ch)
    for (Index r = 0; r < gh; ++r)
      for (Index c = 0; c < gw; ++c) dout[ch](r, c) = dfeat(r * gw + c, static_cast<Index>(ch));

  auto dact2 = enc.conv3.backward(trace.act2, dout, grads.conv3_w, grads.conv3_b);
  for (std::size_t i = 0; i < dact2.size(); ++i)
    dact2[i] = dact2[i].cwiseProduct(nn::gelu_grad(trace.pre2[i]));
  auto dact1 = enc.conv2.backward(trace.act1, dact2, grads.conv2_w, grads.conv2_b);
  for (std::size_t i = 0; i < dact1.size(); ++i)
    dact1[i] = dact1[i].cwiseProduct(nn::gelu_grad(trace.pre1[i]));
  enc.conv1.backward(trace.in1, dact1, grads.conv1_w, grads.conv1_b);
}

}  // namespace ckarank::seg
