#include <gtest/gtest.h>

#include "generators.hpp"
#include "gradcheck.hpp"
#include "painter/nn/adam.hpp"
#include "painter/nn/decoder.hpp"

namespace painter::nn {
namespace {

using testing::gradcheck_config;

ModelConfig small_config() {
  ModelConfig c = gradcheck_config();
  c.n_layers = 3;
  c.ctx_len = 40;
  c.param_scale = 0.1;
  return c;
}

Canvas random_canvas(Rng& rng, int strokes = 5) {
  Canvas c;
  for (int s = 0; s < strokes; ++s) draw_stroke_into(c, testing::random_stroke(rng, 6));
  return c;
}

SequenceInput random_input(Rng& rng, const ModelConfig& cfg, int n, std::vector<int> placeholder_at) {
  SequenceInput x;
  for (int i = 0; i < n; ++i) x.tokens.push_back(rng.uniform_int(2, cfg.vocab - 1));
  for (std::size_t k = 0; k < placeholder_at.size(); ++k) {
    x.tokens[static_cast<std::size_t>(placeholder_at[k])] = Vocab::kPlaceholderId;
    x.placeholders.push_back({placeholder_at[k], static_cast<int>(k)});
    x.images.push_back(std::make_shared<const Canvas>(random_canvas(rng)));
  }
  return x;
}

void randomize_cross(Weights<double>& w, Rng& rng, double sd = 0.3) {
  for (auto& L : w.layers)
    if (L.cross)
      for (Eigen::Index i = 0; i < L.xo.size(); ++i) L.xo.data()[i] = rng.normal(0, sd);
}

TEST(Encoder, ShapeAndPositionalColumns) {
  const auto cfg = small_config();
  const auto w = init_weights<double>(cfg, 1);
  Rng rng(2);
  const auto a = encode_image(random_canvas(rng), w, cfg);
  const auto b = encode_image(blank_canvas(), w, cfg);
  ASSERT_EQ(a.rows(), cfg.grid * cfg.grid);
  ASSERT_EQ(a.cols(), cfg.feat + cfg.pos_dim);
  EXPECT_EQ(a.rightCols(cfg.pos_dim), b.rightCols(cfg.pos_dim));
  EXPECT_GT((a.leftCols(cfg.feat) - b.leftCols(cfg.feat)).cwiseAbs().maxCoeff(), 0.0);
  EXPECT_EQ(encode_image(blank_canvas(), w, cfg), b);
}

TEST(Encoder, PatchifyRoundTrip) {
  Mat<double> a(16, 3);
  for (Eigen::Index i = 0; i < a.size(); ++i) a.data()[i] = static_cast<double>(i);
  const auto p = patchify(a, 4, 2);
  EXPECT_EQ(p.rows(), 4);
  EXPECT_EQ(p(0, 3), a(1, 0));
  EXPECT_EQ(p(0, 6), a(4, 0));
  EXPECT_EQ(unpatchify(p, 4, 2, 3), a);
}

TEST(CrossAttention, SingleKeyPassesValueThrough) {
  ModelConfig cfg = small_config();
  cfg.grid = 1;
  cfg.enc_channels = {2, 2, 2};
  auto w = init_weights<double>(cfg, 3);
  Rng rng(4);
  randomize_cross(w, rng);
  const auto& L = w.layers[0];
  const Mat<double> f = Mat<double>::Random(1, cfg.image_dim());
  const RowVec<double> h = RowVec<double>::Random(cfg.hidden);
  const auto r = cross_attention<double>(f, h, L);
  EXPECT_DOUBLE_EQ(r.weights(0), 1.0);
  const RowVec<double> expect = f * L.xv * L.xo;
  EXPECT_LT((r.delta - expect).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(CrossAttention, ZeroOutputProjectionGivesZeroDelta) {
  const auto cfg = small_config();
  const auto w = init_weights<double>(cfg, 5);
  const Mat<double> f = Mat<double>::Random(cfg.image_rows(), cfg.image_dim());
  const auto r = cross_attention<double>(f, RowVec<double>::Random(cfg.hidden), w.layers[0]);
  EXPECT_TRUE((r.delta.array() == 0.0).all());
}

TEST(CrossAttention, WeightsNormalized) {
  const auto cfg = small_config();
  auto w = init_weights<double>(cfg, 6);
  Rng rng(7);
  for (int t = 0; t < 50; ++t) {
    const Mat<double> f = Mat<double>::Random(cfg.image_rows(), cfg.image_dim()) * 3.0;
    const auto r = cross_attention<double>(f, RowVec<double>::Random(cfg.hidden) * 3.0, w.layers[0]);
    ASSERT_NEAR(r.weights.sum(), 1.0, 1e-6);
  }
}

TEST(Forward, ResidualIdentityAtZeroInit) {
  const auto cfg = small_config();
  const auto w = init_weights<double>(cfg, 8);
  Rng rng(9);
  const auto x = random_input(rng, cfg, 20, {3, 9, 15});
  const auto with = forward(x, w, cfg);
  const auto without = forward(x, w, cfg, nullptr, ForwardOptions{false});
  EXPECT_LE((with - without).cwiseAbs().maxCoeff(), 1e-6);
}

TEST(Forward, CrossAttentionChangesLogitsOnceActive) {
  const auto cfg = small_config();
  auto w = init_weights<double>(cfg, 8);
  Rng rng(9);
  randomize_cross(w, rng);
  const auto x = random_input(rng, cfg, 20, {3});
  const auto with = forward(x, w, cfg);
  const auto without = forward(x, w, cfg, nullptr, ForwardOptions{false});
  EXPECT_LE((with.topRows(3) - without.topRows(3)).cwiseAbs().maxCoeff(), 1e-12);
  EXPECT_GT((with.bottomRows(17) - without.bottomRows(17)).cwiseAbs().maxCoeff(), 1e-6);
}

TEST(Forward, Causal) {
  const auto cfg = small_config();
  auto w = init_weights<double>(cfg, 10);
  Rng rng(11);
  randomize_cross(w, rng);
  auto x = random_input(rng, cfg, 24, {5, 12});
  const auto base = forward(x, w, cfg);
  for (int p : {0, 7, 12, 23}) {
    auto y = x;
    if (p == 12) {
      y.images[1] = std::make_shared<const Canvas>(random_canvas(rng, 9));
    } else {
      y.tokens[static_cast<std::size_t>(p)] = y.tokens[static_cast<std::size_t>(p)] == 2 ? 3 : 2;
    }
    const auto out = forward(y, w, cfg);
    if (p > 0) EXPECT_EQ(out.topRows(p), base.topRows(p)) << p;
    EXPECT_GT((out.bottomRows(24 - p) - base.bottomRows(24 - p)).cwiseAbs().maxCoeff(), 0.0) << p;
  }
}

TEST(Forward, CrossAttentionOnAllButLastLayer) {
  auto cfg = small_config();
  cfg.n_layers = 2;
  const auto w = init_weights<double>(cfg, 12);
  EXPECT_TRUE(w.layers[0].cross);
  EXPECT_FALSE(w.layers[1].cross);
  cfg.n_layers = 4;
  const auto w4 = init_weights<double>(cfg, 12);
  int active = 0;
  for (const auto& L : w4.layers) active += L.cross ? 1 : 0;
  EXPECT_EQ(active, 3);
}

TEST(Forward, InputContract) {
  const auto cfg = small_config();
  const auto w = init_weights<double>(cfg, 13);
  Rng rng(14);
  auto x = random_input(rng, cfg, cfg.ctx_len + 1, {});
  EXPECT_THROW(forward(x, w, cfg), ContextOverflow);
  x = random_input(rng, cfg, 10, {4});
  x.tokens[4] = 5;
  EXPECT_THROW(forward(x, w, cfg), ShapeMismatch);
}

TEST(MaskedCe, UniformLogits) {
  Mat<double> logits = Mat<double>::Zero(2, 4);
  EXPECT_NEAR(masked_ce<double>(logits, {1, 2}, {false, true}), std::log(4.0), 1e-12);
  EXPECT_NEAR(masked_ce<double>(logits, {1, 2}, {false, true}), 1.3863, 1e-4);
}

TEST(MaskedCe, MaskedOutTargetsIgnored) {
  Mat<double> logits = Mat<double>::Random(5, 7);
  const std::vector<bool> mask{true, false, true, false, true};
  EXPECT_EQ(masked_ce<double>(logits, {1, 2, 3, 4, 5}, mask), masked_ce<double>(logits, {1, 6, 3, 0, 5}, mask));
  EXPECT_THROW(masked_ce<double>(logits, {1, 2, 3, 4, 5}, std::vector<bool>(5, false)), EmptyMask);
}

TEST(Backward, MatchesFiniteDifferences) {
  auto p = testing::gradcheck_problem(21);
  const auto checks = testing::run_gradcheck(p, 1e-5, 12, 22);
  for (const auto& c : checks) EXPECT_LT(c.max_rel_error, 1e-4) << c.name;
}

TEST(Backward, MaskedOutTargetsDoNotAffectGradients) {
  auto p = testing::gradcheck_problem(23);
  auto g1 = zero_weights<double>(p.cfg), g2 = zero_weights<double>(p.cfg);
  backward(p.x, p.targets, p.mask, p.w, p.cfg, g1);
  auto t2 = p.targets;
  for (std::size_t i = 0; i < t2.size(); ++i)
    if (!p.mask[i]) t2[i] = (t2[i] + 7) % p.cfg.vocab;
  backward(p.x, t2, p.mask, p.w, p.cfg, g2);
  auto a = tensors(g1), b = tensors(g2);
  for (std::size_t i = 0; i < a.size(); ++i) EXPECT_EQ(*a[i], *b[i]);
}

TEST(Backward, UnusedParametersGetZeroGradient) {
  auto p = testing::gradcheck_problem(24);
  // Only the last position contributes; later positional rows and unseen
  // tokens cannot influence it.
  std::fill(p.mask.begin(), p.mask.end(), false);
  p.mask[6] = true;
  auto g = zero_weights<double>(p.cfg);
  backward(p.x, p.targets, p.mask, p.w, p.cfg, g);
  for (int r = 7; r < p.cfg.ctx_len; ++r) EXPECT_TRUE((g.pos_emb.row(r).array() == 0.0).all()) << r;
  for (std::size_t i = 7; i < p.x.tokens.size(); ++i) {
    const auto t = p.x.tokens[i];
    if (std::find(p.x.tokens.begin(), p.x.tokens.begin() + 7, t) == p.x.tokens.begin() + 7)
      EXPECT_TRUE((g.tok_emb.row(t).array() == 0.0).all());
  }
}

TEST(Backward, FrozenEncoderHasNoGradient) {
  auto p = testing::gradcheck_problem(25);
  p.cfg.freeze_encoder = true;
  auto g = zero_weights<double>(p.cfg);
  backward(p.x, p.targets, p.mask, p.w, p.cfg, g);
  g.visit([](const std::string& name, const Mat<double>& m, bool enc) {
    if (enc) EXPECT_TRUE((m.array() == 0.0).all()) << name;
  });
  EXPECT_GT(g.layers[0].xk.cwiseAbs().maxCoeff(), 0.0);
}

TEST(Adam, FirstStep) {
  auto cfg = small_config();
  auto w = zero_weights<double>(cfg);
  auto g = zero_weights<double>(cfg);
  auto s = adam_init<double>(cfg);
  g.head_b(0, 0) = 1.0;
  adam_step(w, g, s, AdamParams{1e-3});
  EXPECT_NEAR(w.head_b(0, 0), -1e-3 / (1 + 1e-8), 1e-15);
  EXPECT_EQ(w.head_b(0, 1), 0.0);
  zero_grads(g);
  auto before = w.tok_emb;
  adam_step(w, g, s, AdamParams{1e-3});
  EXPECT_EQ(w.tok_emb, before);
}

TEST(Adam, Deterministic) {
  auto cfg = small_config();
  auto run = [&] {
    auto w = init_weights<float>(cfg, 30);
    auto s = adam_init<float>(cfg);
    Rng rng(31);
    auto x = random_input(rng, cfg, 12, {2});
    std::vector<TokenId> t(12, 5);
    std::vector<bool> m(12, true);
    for (int i = 0; i < 3; ++i) {
      auto g = zero_weights<float>(cfg);
      backward(x, t, m, w, cfg, g);
      adam_step(w, g, s, AdamParams{});
    }
    return std::make_pair(w, s);
  };
  auto [w1, s1] = run();
  auto [w2, s2] = run();
  auto a = tensors(w1), b = tensors(w2), c = tensors(s1.m), d = tensors(s2.m);
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_EQ(*a[i], *b[i]);
    EXPECT_EQ(*c[i], *d[i]);
  }
}

TEST(Adam, ClipGradNorm) {
  auto cfg = small_config();
  auto g = zero_weights<double>(cfg);
  g.head_b(0, 0) = 3;
  g.head_b(0, 1) = 4;
  EXPECT_DOUBLE_EQ(clip_grad_norm(g, 1.0), 5.0);
  EXPECT_NEAR(grad_norm(g), 1.0, 1e-12);
}

TEST(Decoder, MatchesFullForward) {
  const auto cfg = small_config();
  auto w = init_weights<double>(cfg, 40);
  Rng rng(41);
  randomize_cross(w, rng);
  const auto x = random_input(rng, cfg, 30, {2, 11, 20});
  const auto full = forward(x, w, cfg);
  IncrementalDecoder<double> dec(w, cfg);
  std::size_t k = 0;
  for (std::size_t p = 0; p < x.tokens.size(); ++p) {
    const Canvas* img = nullptr;
    if (k < x.placeholders.size() && x.placeholders[k].position == static_cast<int>(p)) img = x.images[k++].get();
    const auto logits = dec.step(x.tokens[p], img);
    ASSERT_LT((logits - full.row(static_cast<Eigen::Index>(p))).cwiseAbs().maxCoeff(), 1e-10) << p;
  }
  EXPECT_EQ(dec.last_cross_weights().size(), 2u);
  EXPECT_NEAR(dec.last_cross_weights()[0].sum(), 1.0, 1e-9);
}

TEST(Decoder, RejectsUnboundPlaceholders) {
  const auto cfg = small_config();
  const auto w = init_weights<double>(cfg, 42);
  IncrementalDecoder<double> dec(w, cfg);
  EXPECT_THROW(dec.step(Vocab::kPlaceholderId), ShapeMismatch);
  const Canvas c;
  EXPECT_THROW(dec.step(5, &c), ShapeMismatch);
}

}  // namespace
}  // namespace painter::nn
