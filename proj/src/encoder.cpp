// SPDX-FileCopyrightText: (c) 2026 ckarank contributors
// SPDX-License-Identifier: Apache-2.0

#include "ckarank/encoder.hpp"

#include <cmath>
#include <cstring>

namespace ckarank::encoder {

void EncoderConfig::validate() const {
  require(layer_count >= 1, "EncoderConfig: layer_count must be >= 1");
  require(d_model >= 1 && head_count >= 1 && d_model % head_count == 0,
          "EncoderConfig: d_model must be divisible by head_count");
  require(patch_size >= 1 && image_size >= patch_size && image_size % patch_size == 0,
          "EncoderConfig: image_size must be divisible by patch_size");
}

long long FrozenWeights::parameter_count() const {
  long long n = patch_w.size() + patch_b.size() + pos.size();
  for (const auto& b : blocks) {
    n += b.ln1_gamma.size() + b.ln1_beta.size() + b.ln2_gamma.size() + b.ln2_beta.size();
    n += b.wq.size() + b.wk.size() + b.wv.size() + b.wo.size();
    n += b.bq.size() + b.bk.size() + b.bv.size() + b.bo.size();
    n += b.w1.size() + b.b1.size() + b.w2.size() + b.b2.size();
  }
  n += final_ln_gamma.size() + final_ln_beta.size();
  return n;
}

long long EncoderState::adapter_parameter_count() const {
  long long n = 0;
  for (const auto& layer : adapters)
    for (const auto& ad : layer) n += ad.a.size() + ad.b.size();
  return n;
}

EncoderState build_encoder(const EncoderConfig& cfg, const allocation::RankPlan& plan) {
  cfg.validate();
  require_shape(plan.layer_count() == cfg.layer_count,
                "build_encoder: plan has " + std::to_string(plan.layer_count()) +
                    " layers, config wants " + std::to_string(cfg.layer_count));

  EncoderState state;
  state.cfg = cfg;
  state.plan = plan;

  const int d = cfg.d_model;
  const int hidden = 4 * d;
  constexpr double kInitStd = 0.02;

  {
    Rng rng(mix_seed(cfg.seed, 0));
    state.frozen.patch_w = gaussian_matrix(rng, d, cfg.patch_dim(), 0.0, kInitStd);
    state.frozen.patch_b = Vector::Zero(d);
    state.frozen.pos = gaussian_matrix(rng, cfg.token_count(), d, 0.0, kInitStd);
    state.frozen.final_ln_gamma = Vector::Ones(d);
    state.frozen.final_ln_beta = Vector::Zero(d);
  }

  state.frozen.blocks.resize(cfg.layer_count);
  for (int l = 0; l < cfg.layer_count; ++l) {
    Rng rng(mix_seed(cfg.seed, 100 + l));
    auto& b = state.frozen.blocks[l];
    b.ln1_gamma = Vector::Ones(d);
    b.ln1_beta = Vector::Zero(d);
    b.wq = gaussian_matrix(rng, d, d, 0.0, kInitStd);
    b.wk = gaussian_matrix(rng, d, d, 0.0, kInitStd);
    b.wv = gaussian_matrix(rng, d, d, 0.0, kInitStd);
    b.wo = gaussian_matrix(rng, d, d, 0.0, kInitStd);
    b.bq = Vector::Zero(d);
    b.bk = Vector::Zero(d);
    b.bv = Vector::Zero(d);
    b.bo = Vector::Zero(d);
    b.ln2_gamma = Vector::Ones(d);
    b.ln2_beta = Vector::Zero(d);
    b.w1 = gaussian_matrix(rng, hidden, d, 0.0, kInitStd);
    b.b1 = Vector::Zero(hidden);
    b.w2 = gaussian_matrix(rng, d, hidden, 0.0, kInitStd);
    b.b2 = Vector::Zero(d);
  }

  state.adapters.resize(cfg.layer_count);
  for (int l = 0; l < cfg.layer_count; ++l) {
    const int rank = plan.per_layer_rank[l];
    for (int p = 0; p < 4; ++p) {
      Rng rng(mix_seed(cfg.seed, 1000 + 8 * l + p));
      auto& ad = state.adapters[l][p];
      ad.rank = rank;
      ad.alpha = default_alpha(rank);
      ad.a = gaussian_matrix(rng, rank, d, 0.0, kInitStd);
      ad.b = Matrix::Zero(d, rank);
    }
  }
  return state;
}

Matrix adapted_projection(const Matrix& w_frozen, const LoraAdapter& adapter,
                          const Matrix& x) {
  require_shape(w_frozen.cols() == x.rows(), "adapted_projection: input size mismatch");
  require_shape(adapter.a.cols() == x.rows() && adapter.b.rows() == w_frozen.rows() &&
                    adapter.a.rows() == adapter.rank && adapter.b.cols() == adapter.rank,
                "adapted_projection: adapter factor shapes do not match");
  return w_frozen * x + adapter.scaling() * (adapter.b * (adapter.a * x));
}

namespace {

Matrix effective_weight(const Matrix& frozen, const LoraAdapter& ad, bool apply) {
  if (!apply) return frozen;
  return frozen + ad.update();
}

void attention_heads_forward(const EncoderConfig& cfg, int batch, LayerTrace& t) {
  const int T = cfg.token_count();
  const int dh = cfg.head_dim();
  const double scale = 1.0 / std::sqrt(static_cast<double>(dh));
  t.ctx.resize(t.q.rows(), t.q.cols());
  t.attn.clear();
  t.attn.reserve(static_cast<std::size_t>(batch) * cfg.head_count);
  for (int b = 0; b < batch; ++b) {
    for (int h = 0; h < cfg.head_count; ++h) {
      const auto qb = t.q.block(b * T, h * dh, T, dh);
      const auto kb = t.k.block(b * T, h * dh, T, dh);
      const auto vb = t.v.block(b * T, h * dh, T, dh);
      Matrix scores = scale * (qb * kb.transpose());
      // Row-wise softmax with max subtraction.
      for (Index r = 0; r < scores.rows(); ++r) {
        const double mx = scores.row(r).maxCoeff();
        scores.row(r) = (scores.row(r).array() - mx).exp();
        scores.row(r) /= scores.row(r).sum();
      }
      t.ctx.block(b * T, h * dh, T, dh) = scores * vb;
      t.attn.push_back(std::move(scores));
    }
  }
}

void attention_heads_backward(const EncoderConfig& cfg, int batch, const LayerTrace& t,
                              const Matrix& dctx, Matrix& dq, Matrix& dk, Matrix& dv) {
  const int T = cfg.token_count();
  const int dh = cfg.head_dim();
  const double scale = 1.0 / std::sqrt(static_cast<double>(dh));
  dq.setZero(t.q.rows(), t.q.cols());
  dk.setZero(t.k.rows(), t.k.cols());
  dv.setZero(t.v.rows(), t.v.cols());
  for (int b = 0; b < batch; ++b) {
    for (int h = 0; h < cfg.head_count; ++h) {
      const auto qb = t.q.block(b * T, h * dh, T, dh);
      const auto kb = t.k.block(b * T, h * dh, T, dh);
      const auto vb = t.v.block(b * T, h * dh, T, dh);
      const Matrix& probs = t.attn[static_cast<std::size_t>(b) * cfg.head_count + h];
      const auto dctx_b = dctx.block(b * T, h * dh, T, dh);

      dv.block(b * T, h * dh, T, dh) = probs.transpose() * dctx_b;
      Matrix dprobs = dctx_b * vb.transpose();
      // Softmax backward: ds = p .* (dp - rowsum(dp .* p)).
      Matrix dscores(T, T);
      for (Index r = 0; r < T; ++r) {
        const double dot = dprobs.row(r).dot(probs.row(r));
        dscores.row(r) = probs.row(r).array() * (dprobs.row(r).array() - dot);
      }
      dscores *= scale;
      dq.block(b * T, h * dh, T, dh) = dscores * kb;
      dk.block(b * T, h * dh, T, dh) = dscores.transpose() * qb;
    }
  }
}

}  // namespace

ForwardResult forward(const EncoderState& state, const std::vector<RgbImage>& images,
                      bool apply_adapters, ForwardTrace* trace) {
  const EncoderConfig& cfg = state.cfg;
  cfg.validate();
  require_shape(!images.empty(), "forward: empty batch");
  for (const auto& img : images)
    for (const auto& ch : img)
      require_shape(ch.rows() == cfg.image_size && ch.cols() == cfg.image_size,
                    "forward: image size does not match config");

  const int batch = static_cast<int>(images.size());
  const int T = cfg.token_count();
  const int g = cfg.grid();
  const int ps = cfg.patch_size;
  const int d = cfg.d_model;

  // Patchify: rows are (image, token); patch vector is channel-major.
  Matrix patches(static_cast<Index>(batch) * T, cfg.patch_dim());
  for (int b = 0; b < batch; ++b)
    for (int gi = 0; gi < g; ++gi)
      for (int gj = 0; gj < g; ++gj) {
        const Index row = static_cast<Index>(b) * T + gi * g + gj;
        Index col = 0;
        for (int c = 0; c < 3; ++c)
          for (int dy = 0; dy < ps; ++dy)
            for (int dx = 0; dx < ps; ++dx)
              patches(row, col++) = images[b][c](gi * ps + dy, gj * ps + dx);
      }

  Matrix x = patches * state.frozen.patch_w.transpose();
  x.rowwise() += state.frozen.patch_b.transpose();
  for (int b = 0; b < batch; ++b) x.middleRows(static_cast<Index>(b) * T, T) += state.frozen.pos;

  ForwardResult result;
  result.activations.per_layer.reserve(cfg.layer_count);
  if (trace) {
    trace->batch = batch;
    trace->patches = patches;
    trace->layers.assign(cfg.layer_count, LayerTrace{});
  }

  LayerTrace local;
  for (int l = 0; l < cfg.layer_count; ++l) {
    LayerTrace& t = trace ? trace->layers[l] : local;
    const BlockWeights& w = state.frozen.blocks[l];
    const auto& ads = state.adapters[l];

    t.x_in = x;
    t.wq_eff = effective_weight(w.wq, ads[0], apply_adapters);
    t.wk_eff = effective_weight(w.wk, ads[1], apply_adapters);
    t.wv_eff = effective_weight(w.wv, ads[2], apply_adapters);
    t.wo_eff = effective_weight(w.wo, ads[3], apply_adapters);

    t.xn1 = nn::layernorm_forward(x, w.ln1_gamma, w.ln1_beta, t.ln1);
    t.q = t.xn1 * t.wq_eff.transpose();
    t.q.rowwise() += w.bq.transpose();
    t.k = t.xn1 * t.wk_eff.transpose();
    t.k.rowwise() += w.bk.transpose();
    t.v = t.xn1 * t.wv_eff.transpose();
    t.v.rowwise() += w.bv.transpose();

    attention_heads_forward(cfg, batch, t);

    Matrix attn_out = t.ctx * t.wo_eff.transpose();
    attn_out.rowwise() += w.bo.transpose();
    t.x_mid = x + attn_out;

    t.xn2 = nn::layernorm_forward(t.x_mid, w.ln2_gamma, w.ln2_beta, t.ln2);
    t.h_pre = t.xn2 * w.w1.transpose();
    t.h_pre.rowwise() += w.b1.transpose();
    t.h_act = nn::gelu(t.h_pre);
    Matrix mlp_out = t.h_act * w.w2.transpose();
    mlp_out.rowwise() += w.b2.transpose();
    x = t.x_mid + mlp_out;

    // Token-mean pooled residual-stream output, one row per image.
    Matrix pooled(batch, d);
    for (int b = 0; b < batch; ++b)
      pooled.row(b) = x.middleRows(static_cast<Index>(b) * T, T).colwise().mean();
    result.activations.per_layer.push_back(std::move(pooled));
  }

  if (trace) trace->x_final_pre = x;
  nn::LayerNormTrace final_trace;
  result.features = nn::layernorm_forward(x, state.frozen.final_ln_gamma,
                                          state.frozen.final_ln_beta,
                                          trace ? trace->final_ln : final_trace);
  return result;
}

ForwardResult forward_masked(const EncoderState& state, const std::vector<RgbImage>& images,
                             const std::vector<bool>& adapter_enabled_per_layer) {
  require_shape(static_cast<int>(adapter_enabled_per_layer.size()) == state.cfg.layer_count,
                "forward_masked: mask length mismatch");
  EncoderState masked = state;
  for (int l = 0; l < state.cfg.layer_count; ++l)
    if (!adapter_enabled_per_layer[l])
      for (auto& ad : masked.adapters[l]) ad.b.setZero();
  return forward(masked, images, true, nullptr);
}

void EncoderGrads::init_like(const EncoderState& state) {
  const auto& f = state.frozen;
  patch_w = Matrix::Zero(f.patch_w.rows(), f.patch_w.cols());
  patch_b = Vector::Zero(f.patch_b.size());
  pos = Matrix::Zero(f.pos.rows(), f.pos.cols());
  final_ln_gamma = Vector::Zero(f.final_ln_gamma.size());
  final_ln_beta = Vector::Zero(f.final_ln_beta.size());
  blocks.resize(f.blocks.size());
  for (std::size_t l = 0; l < f.blocks.size(); ++l) {
    const auto& b = f.blocks[l];
    auto& gb = blocks[l];
    gb.ln1_gamma = Vector::Zero(b.ln1_gamma.size());
    gb.ln1_beta = Vector::Zero(b.ln1_beta.size());
    gb.ln2_gamma = Vector::Zero(b.ln2_gamma.size());
    gb.ln2_beta = Vector::Zero(b.ln2_beta.size());
    gb.wq = Matrix::Zero(b.wq.rows(), b.wq.cols());
    gb.wk = Matrix::Zero(b.wk.rows(), b.wk.cols());
    gb.wv = Matrix::Zero(b.wv.rows(), b.wv.cols());
    gb.wo = Matrix::Zero(b.wo.rows(), b.wo.cols());
    gb.bq = Vector::Zero(b.bq.size());
    gb.bk = Vector::Zero(b.bk.size());
    gb.bv = Vector::Zero(b.bv.size());
    gb.bo = Vector::Zero(b.bo.size());
    gb.w1 = Matrix::Zero(b.w1.rows(), b.w1.cols());
    gb.b1 = Vector::Zero(b.b1.size());
    gb.w2 = Matrix::Zero(b.w2.rows(), b.w2.cols());
    gb.b2 = Vector::Zero(b.b2.size());
  }
  adapters.resize(state.adapters.size());
  for (std::size_t l = 0; l < state.adapters.size(); ++l)
    for (int p = 0; p < 4; ++p) {
      adapters[l][p].a = Matrix::Zero(state.adapters[l][p].a.rows(),
                                      state.adapters[l][p].a.cols());
      adapters[l][p].b = Matrix::Zero(state.adapters[l][p].b.rows(),
                                      state.adapters[l][p].b.cols());
    }
}

void backward(const EncoderState& state, const ForwardTrace& trace, const Matrix& dfeatures,
              bool apply_adapters, EncoderGrads& grads) {
  const EncoderConfig& cfg = state.cfg;
  const int batch = trace.batch;
  const int T = cfg.token_count();

  Matrix dx = nn::layernorm_backward(dfeatures, state.frozen.final_ln_gamma, trace.final_ln,
                                     grads.final_ln_gamma, grads.final_ln_beta);

  Matrix dq, dk, dv;
  for (int l = cfg.layer_count - 1; l >= 0; --l) {
    const LayerTrace& t = trace.layers[l];
    const BlockWeights& w = state.frozen.blocks[l];
    auto& gb = grads.blocks[l];

    // MLP branch.
    grads.blocks[l].w2 += dx.transpose() * t.h_act;
    gb.b2 += dx.colwise().sum().transpose();
    Matrix dh_act = dx * w.w2;
    Matrix dh_pre = dh_act.cwiseProduct(nn::gelu_grad(t.h_pre));
    gb.w1 += dh_pre.transpose() * t.xn2;
    gb.b1 += dh_pre.colwise().sum().transpose();
    Matrix dxn2 = dh_pre * w.w1;
    Matrix dx_mid = dx + nn::layernorm_backward(dxn2, w.ln2_gamma, t.ln2, gb.ln2_gamma,
                                                gb.ln2_beta);

    // Attention branch.
    Matrix dattn = dx_mid;
    gb.wo += dattn.transpose() * t.ctx;
    gb.bo += dattn.colwise().sum().transpose();
    Matrix dctx = dattn * t.wo_eff;
    attention_heads_backward(cfg, batch, t, dctx, dq, dk, dv);

    gb.wq += dq.transpose() * t.xn1;
    gb.bq += dq.colwise().sum().transpose();
    gb.wk += dk.transpose() * t.xn1;
    gb.bk += dk.colwise().sum().transpose();
    gb.wv += dv.transpose() * t.xn1;
    gb.bv += dv.colwise().sum().transpose();

    Matrix dxn1 = dq * t.wq_eff + dk * t.wk_eff + dv * t.wv_eff;
    dx = dx_mid + nn::layernorm_backward(dxn1, w.ln1_gamma, t.ln1, gb.ln1_gamma, gb.ln1_beta);
  }

  // Patch embedding.
  grads.patch_w += dx.transpose() * trace.patches;
  grads.patch_b += dx.colwise().sum().transpose();
  for (int b = 0; b < batch; ++b)
    grads.pos += dx.middleRows(static_cast<Index>(b) * T, T);

  if (apply_adapters) {
    for (int l = 0; l < cfg.layer_count; ++l) {
      const auto& ads = state.adapters[l];
      const std::array<const Matrix*, 4> weff_grads = {&grads.blocks[l].wq, &grads.blocks[l].wk,
                                                       &grads.blocks[l].wv, &grads.blocks[l].wo};
      for (int p = 0; p < 4; ++p) {
        const double s = ads[p].scaling();
        grads.adapters[l][p].a += s * ads[p].b.transpose() * (*weff_grads[p]);
        grads.adapters[l][p].b += s * (*weff_grads[p]) * ads[p].a.transpose();
      }
    }
  }
}

TrainableView trainable_parameters(EncoderState& state) {
  TrainableView view;
  for (auto& layer : state.adapters)
    for (auto& ad : layer) {
      view.factors.push_back(&ad.a);
      view.factors.push_back(&ad.b);
      view.count += ad.a.size() + ad.b.size();
    }
  return view;
}

namespace {

void hash_bytes(std::uint64_t& h, const double* data, Index n) {
  const auto* bytes = reinterpret_cast<const unsigned char*>(data);
  for (Index i = 0; i < n * static_cast<Index>(sizeof(double)); ++i) {
    h ^= bytes[i];
    h *= 0x100000001b3ULL;
  }
}

void hash_matrix(std::uint64_t& h, const Matrix& m) { hash_bytes(h, m.data(), m.size()); }
void hash_vector(std::uint64_t& h, const Vector& v) { hash_bytes(h, v.data(), v.size()); }

}  // namespace

std::uint64_t frozen_weights_hash(const EncoderState& state) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  const auto& f = state.frozen;
  hash_matrix(h, f.patch_w);
  hash_vector(h, f.patch_b);
  hash_matrix(h, f.pos);
  for (const auto& b : f.blocks) {
    hash_vector(h, b.ln1_gamma);
    hash_vector(h, b.ln1_beta);
    hash_matrix(h, b.wq);
    hash_matrix(h, b.wk);
    hash_matrix(h, b.wv);
    hash_matrix(h, b.wo);
    hash_vector(h, b.bq);
    hash_vector(h, b.bk);
    hash_vector(h, b.bv);
    hash_vector(h, b.bo);
    hash_vector(h, b.ln2_gamma);
    hash_vector(h, b.ln2_beta);
    hash_matrix(h, b.w1);
    hash_vector(h, b.b1);
    hash_matrix(h, b.w2);
    hash_vector(h, b.b2);
  }
  hash_vector(h, f.final_ln_gamma);
  hash_vector(h, f.final_ln_beta);
  return h;
}

}  // namespace ckarank::encoder
