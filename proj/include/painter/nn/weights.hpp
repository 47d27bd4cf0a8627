#pragma once

#include <string>
#include <vector>

#include "painter/nn/config.hpp"
#include "painter/nn/tensor.hpp"
#include "painter/rng.hpp"

namespace painter::nn {

template <class T>
struct LayerWeights {
  Mat<T> ln1_g, ln1_b;
  Mat<T> attn_w, attn_b;  // fused q|k|v
  Mat<T> proj_w, proj_b;
  Mat<T> ln2_g, ln2_b;
  Mat<T> fc1_w, fc1_b;
  Mat<T> fc2_w, fc2_b;
  bool cross = false;
  Mat<T> xq, xk, xv, xo;  // image cross-attention, present when `cross`
};

template <class T>
struct Weights {
  Mat<T> tok_emb, pos_emb;
  std::vector<LayerWeights<T>> layers;
  Mat<T> lnf_g, lnf_b;
  Mat<T> head_w, head_b;
  std::array<Mat<T>, 4> conv_w, conv_b;

  /// Calls f(name, matrix, is_encoder) for every tensor in manifest order.
  template <class F>
  void visit(F&& f) {
    visit_impl(*this, f);
  }
  template <class F>
  void visit(F&& f) const {
    visit_impl(*this, f);
  }

  std::size_t parameter_count() const {
    std::size_t n = 0;
    visit([&](const std::string&, const Mat<T>& m, bool) { n += static_cast<std::size_t>(m.size()); });
    return n;
  }

 private:
  template <class Self, class F>
  static void visit_impl(Self& w, F& f) {
    f("tok_emb", w.tok_emb, false);
    f("pos_emb", w.pos_emb, false);
    for (std::size_t l = 0; l < w.layers.size(); ++l) {
      auto& L = w.layers[l];
      const std::string p = "layer" + std::to_string(l) + ".";
      f(p + "ln1_g", L.ln1_g, false);
      f(p + "ln1_b", L.ln1_b, false);
      f(p + "attn_w", L.attn_w, false);
      f(p + "attn_b", L.attn_b, false);
      f(p + "proj_w", L.proj_w, false);
      f(p + "proj_b", L.proj_b, false);
      f(p + "ln2_g", L.ln2_g, false);
      f(p + "ln2_b", L.ln2_b, false);
      f(p + "fc1_w", L.fc1_w, false);
      f(p + "fc1_b", L.fc1_b, false);
      f(p + "fc2_w", L.fc2_w, false);
      f(p + "fc2_b", L.fc2_b, false);
      if (L.cross) {
        f(p + "xq", L.xq, false);
        f(p + "xk", L.xk, false);
        f(p + "xv", L.xv, false);
        f(p + "xo", L.xo, false);
      }
    }
    f("lnf_g", w.lnf_g, false);
    f("lnf_b", w.lnf_b, false);
    f("head_w", w.head_w, false);
    f("head_b", w.head_b, false);
    for (std::size_t k = 0; k < 4; ++k) {
      f("conv" + std::to_string(k) + ".w", w.conv_w[k], true);
      f("conv" + std::to_string(k) + ".b", w.conv_b[k], true);
    }
  }
};

/// Input/output channel counts of the four encoder convolutions.
inline std::array<std::pair<int, int>, 4> conv_shapes(const ModelConfig& c) {
  const int s0 = c.first_stride();
  const auto& ch = c.enc_channels;
  return {{{s0 * s0 * 3, ch[0]}, {4 * ch[0], ch[1]}, {4 * ch[1], ch[2]}, {4 * ch[2], c.feat}}};
}

/// Correctly shaped, all zero.
template <class T>
Weights<T> zero_weights(const ModelConfig& c) {
  c.validate();
  Weights<T> w;
  const int H = c.hidden, D = c.mlp_dim(), V = c.vocab, I = c.image_dim();
  auto z = [](int r, int k) { return Mat<T>::Zero(r, k); };
  w.tok_emb = z(V, H);
  w.pos_emb = z(c.ctx_len, H);
  w.layers.resize(static_cast<std::size_t>(c.n_layers));
  for (int l = 0; l < c.n_layers; ++l) {
    auto& L = w.layers[static_cast<std::size_t>(l)];
    L.ln1_g = z(1, H), L.ln1_b = z(1, H);
    L.attn_w = z(H, 3 * H), L.attn_b = z(1, 3 * H);
    L.proj_w = z(H, H), L.proj_b = z(1, H);
    L.ln2_g = z(1, H), L.ln2_b = z(1, H);
    L.fc1_w = z(H, D), L.fc1_b = z(1, D);
    L.fc2_w = z(D, H), L.fc2_b = z(1, H);
    L.cross = l < c.n_layers - 1;
    if (L.cross) {
      L.xq = z(H, H), L.xk = z(I, H), L.xv = z(I, H), L.xo = z(H, H);
    }
  }
  w.lnf_g = z(1, H), w.lnf_b = z(1, H);
  w.head_w = z(H, V), w.head_b = z(1, V);
  const auto shapes = conv_shapes(c);
  for (std::size_t k = 0; k < 4; ++k) {
    w.conv_w[k] = z(shapes[k].first, shapes[k].second);
    w.conv_b[k] = z(1, shapes[k].second);
  }
  return w;
}

/// Normal(0, param_scale) matrices, unit norm gains, zero biases, zero
/// cross-attention output projections. Encoder weights use fan-in scaling.
template <class T>
Weights<T> init_weights(const ModelConfig& c, std::uint64_t seed) {
  auto w = zero_weights<T>(c);
  Rng rng(seed);
  auto fill = [&](Mat<T>& m, double sd) {
    for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = static_cast<T>(rng.normal(0.0, sd));
  };
  const double sd = c.param_scale;
  const double resid_sd = sd / std::sqrt(2.0 * c.n_layers);
  fill(w.tok_emb, sd);
  fill(w.pos_emb, sd);
  for (auto& L : w.layers) {
    L.ln1_g.setOnes();
    L.ln2_g.setOnes();
    fill(L.attn_w, sd);
    fill(L.proj_w, resid_sd);
    fill(L.fc1_w, sd);
    fill(L.fc2_w, resid_sd);
    if (L.cross) {
      fill(L.xq, sd);
      fill(L.xk, 1.0 / std::sqrt(static_cast<double>(c.image_dim())));
      fill(L.xv, 1.0 / std::sqrt(static_cast<double>(c.image_dim())));
    }
  }
  w.lnf_g.setOnes();
  fill(w.head_w, sd);
  for (std::size_t k = 0; k < 4; ++k) fill(w.conv_w[k], std::sqrt(2.0 / static_cast<double>(w.conv_w[k].rows())));
  return w;
}

template <class U, class T>
Weights<U> cast_weights(const Weights<T>& w) {
  Weights<U> out;
  out.tok_emb = w.tok_emb.template cast<U>();
  out.pos_emb = w.pos_emb.template cast<U>();
  out.layers.resize(w.layers.size());
  for (std::size_t l = 0; l < w.layers.size(); ++l) {
    const auto& a = w.layers[l];
    auto& b = out.layers[l];
    b.ln1_g = a.ln1_g.template cast<U>(), b.ln1_b = a.ln1_b.template cast<U>();
    b.attn_w = a.attn_w.template cast<U>(), b.attn_b = a.attn_b.template cast<U>();
    b.proj_w = a.proj_w.template cast<U>(), b.proj_b = a.proj_b.template cast<U>();
    b.ln2_g = a.ln2_g.template cast<U>(), b.ln2_b = a.ln2_b.template cast<U>();
    b.fc1_w = a.fc1_w.template cast<U>(), b.fc1_b = a.fc1_b.template cast<U>();
    b.fc2_w = a.fc2_w.template cast<U>(), b.fc2_b = a.fc2_b.template cast<U>();
    b.cross = a.cross;
    b.xq = a.xq.template cast<U>(), b.xk = a.xk.template cast<U>();
    b.xv = a.xv.template cast<U>(), b.xo = a.xo.template cast<U>();
  }
  out.lnf_g = w.lnf_g.template cast<U>(), out.lnf_b = w.lnf_b.template cast<U>();
  out.head_w = w.head_w.template cast<U>(), out.head_b = w.head_b.template cast<U>();
  for (std::size_t k = 0; k < 4; ++k) {
    out.conv_w[k] = w.conv_w[k].template cast<U>();
    out.conv_b[k] = w.conv_b[k].template cast<U>();
  }
  return out;
}

/// Flat views used by the optimizer and the checkpoint writer.
template <class T>
std::vector<Mat<T>*> tensors(Weights<T>& w) {
  std::vector<Mat<T>*> out;
  w.visit([&](const std::string&, Mat<T>& m, bool) { out.push_back(&m); });
  return out;
}

}  // namespace painter::nn
