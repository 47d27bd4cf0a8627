#pragma once

#include <algorithm>
#include <numeric>
#include <string>
#include <vector>

#include "painter/nn/transformer.hpp"

namespace painter::testing {

struct TensorCheck {
  std::string name;
  std::size_t checked = 0;
  double max_rel_error = 0;
};

/// Tiny configuration: 2 layers, H=32, V=64, G=4.
inline nn::ModelConfig gradcheck_config() {
  nn::ModelConfig c;
  c.n_layers = 2;
  c.hidden = 32;
  c.heads = 2;
  c.vocab = 64;
  c.ctx_len = 16;
  c.grid = 4;
  c.feat = 8;
  c.pos_dim = 16;
  c.enc_channels = {4, 4, 4};
  c.param_scale = 0.3;
  return c;
}

struct GradcheckProblem {
  nn::ModelConfig cfg;
  nn::Weights<double> w;
  nn::SequenceInput x;
  std::vector<TokenId> targets;
  std::vector<bool> mask;
};

/// One image, twelve tokens, loss on the last eight positions. Every weight
/// is random, including the cross-attention output projection.
inline GradcheckProblem gradcheck_problem(std::uint64_t seed) {
  GradcheckProblem p;
  p.cfg = gradcheck_config();
  p.w = nn::init_weights<double>(p.cfg, seed);
  Rng rng(seed + 1);
  for (auto& L : p.w.layers) {
    for (auto* m : {&L.xo, &L.ln1_b, &L.ln2_b, &L.attn_b, &L.fc1_b})
      for (Eigen::Index i = 0; i < m->size(); ++i) m->data()[i] = rng.normal(0, 0.3);
    for (Eigen::Index i = 0; i < L.ln1_g.size(); ++i) L.ln1_g.data()[i] += rng.normal(0, 0.3);
  }
  for (auto* m : {&p.w.conv_b[0], &p.w.conv_b[1], &p.w.conv_b[2], &p.w.head_b})
    for (Eigen::Index i = 0; i < m->size(); ++i) m->data()[i] = rng.normal(0, 0.3);
  Canvas canvas;
  for (int s = 0; s < 6; ++s) {
    Stroke st = draw_stroke({});
    st.width = rng.uniform_int(1, 2);
    for (int k = 0; k < 4; ++k) st.points.push_back({rng.uniform_int(0, 255), rng.uniform_int(0, 255)});
    draw_stroke_into(canvas, st);
  }
  const int n = 12;
  for (int i = 0; i < n; ++i) p.x.tokens.push_back(rng.uniform_int(2, p.cfg.vocab - 1));
  p.x.tokens[2] = Vocab::kPlaceholderId;
  p.x.placeholders = {{2, 0}};
  p.x.images = {std::make_shared<const Canvas>(canvas)};
  for (int i = 0; i < n; ++i) {
    p.targets.push_back(rng.uniform_int(2, p.cfg.vocab - 1));
    p.mask.push_back(i >= 4);
  }
  return p;
}

/// Central finite differences against the analytic gradient on a subset of
/// each tensor: its largest analytic entries plus random ones. The error is
/// max |analytic - numeric| normalized by the tensor's largest magnitude.
inline std::vector<TensorCheck> run_gradcheck(GradcheckProblem& p, double eps, std::size_t per_tensor,
                                              std::uint64_t seed) {
  auto grads = nn::zero_weights<double>(p.cfg);
  nn::backward(p.x, p.targets, p.mask, p.w, p.cfg, grads);
  auto loss = [&] { return nn::masked_ce(nn::forward(p.x, p.w, p.cfg), p.targets, p.mask); };

  std::vector<TensorCheck> out;
  std::vector<nn::Mat<double>*> ws = nn::tensors(p.w), gs = nn::tensors(grads);
  std::vector<std::string> names;
  p.w.visit([&](const std::string& name, nn::Mat<double>&, bool) { names.push_back(name); });
  Rng rng(seed);
  for (std::size_t t = 0; t < ws.size(); ++t) {
    auto& W = *ws[t];
    const auto& G = *gs[t];
    const auto size = static_cast<std::size_t>(W.size());
    std::vector<std::size_t> order(size);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
      return std::abs(G.data()[a]) > std::abs(G.data()[b]);
    });
    std::vector<std::size_t> pick(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(std::min(size, per_tensor / 2)));
    while (pick.size() < std::min(size, per_tensor)) {
      const auto k = static_cast<std::size_t>(rng.uniform_int(0, static_cast<int>(size) - 1));
      if (std::find(pick.begin(), pick.end(), k) == pick.end()) pick.push_back(k);
    }
    double max_diff = 0, max_mag = 0;
    for (auto k : pick) {
      const double orig = W.data()[k];
      W.data()[k] = orig + eps;
      const double lp = loss();
      W.data()[k] = orig - eps;
      const double lm = loss();
      W.data()[k] = orig;
      const double num = (lp - lm) / (2 * eps);
      const double ana = G.data()[k];
      max_diff = std::max(max_diff, std::abs(num - ana));
      max_mag = std::max({max_mag, std::abs(num), std::abs(ana)});
    }
    out.push_back({names[t], pick.size(), max_mag > 1e-12 ? max_diff / max_mag : max_diff});
  }
  return out;
}

}  // namespace painter::testing
