#pragma once

#include <limits>
#include <memory>
#include <type_traits>
#include <vector>

#include "painter/codec.hpp"
#include "painter/error.hpp"
#include "painter/nn/encoder.hpp"

namespace painter::nn {

struct Placeholder {
  int position = 0;
  int image = 0;
  friend bool operator==(const Placeholder&, const Placeholder&) = default;
};

struct SequenceInput {
  std::vector<TokenId> tokens;
  std::vector<Placeholder> placeholders;
  std::vector<std::shared_ptr<const Canvas>> images;
};

/// Throws ContextOverflow or ShapeMismatch when the input breaks its contract.
inline void check_input(const SequenceInput& x, const ModelConfig& cfg) {
  if (x.tokens.empty()) throw ShapeMismatch("empty token sequence");
  if (x.tokens.size() > static_cast<std::size_t>(cfg.ctx_len))
    throw ContextOverflow("sequence of " + std::to_string(x.tokens.size()) + " tokens exceeds context " +
                          std::to_string(cfg.ctx_len));
  if (x.placeholders.size() != x.images.size()) throw ShapeMismatch("placeholder/image count mismatch");
  int last = -1;
  for (std::size_t i = 0; i < x.placeholders.size(); ++i) {
    const auto& p = x.placeholders[i];
    if (p.position <= last || p.position >= static_cast<int>(x.tokens.size()))
      throw ShapeMismatch("placeholder positions must be strictly increasing and in range");
    if (x.tokens[static_cast<std::size_t>(p.position)] != Vocab::kPlaceholderId)
      throw ShapeMismatch("placeholder position does not hold the placeholder token");
    if (p.image != static_cast<int>(i) || !x.images[i]) throw ShapeMismatch("placeholder image binding");
    last = p.position;
  }
  for (auto t : x.tokens)
    if (t < 0 || t >= cfg.vocab) throw ShapeMismatch("token id out of range");
}

template <class T>
struct CrossResult {
  RowVec<T> delta;
  ColVec<T> weights;
  RowVec<T> q;
  RowVec<T> context;
};

/// Single-head attention from one query input row to image keys/values:
/// delta = softmax((x Wq)(f Wk)^T / sqrt(H)) (f Wv) Wo.
template <class T>
CrossResult<T> cross_attention(const Mat<T>& keys, const Mat<T>& values, const RowVec<T>& query_in,
                               const LayerWeights<T>& L) {
  CrossResult<T> r;
  const T scale = T(1) / std::sqrt(static_cast<T>(L.xq.cols()));
  r.q = query_in * L.xq;
  r.weights = (keys * r.q.transpose()) * scale;
  softmax_inplace(r.weights);
  r.context = r.weights.transpose() * values;
  r.delta = r.context * L.xo;
  return r;
}

template <class T>
CrossResult<T> cross_attention(const Mat<T>& f, const RowVec<T>& query_in, const LayerWeights<T>& L) {
  return cross_attention<T>(Mat<T>(f * L.xk), Mat<T>(f * L.xv), query_in, L);
}

template <class T>
struct LayerCache {
  // cross-attention, per image and per placeholder
  std::vector<Mat<T>> keys, values;
  std::vector<LnCache<T>> xln;
  std::vector<Mat<T>> xin;
  std::vector<CrossResult<T>> xres;
  // self-attention
  LnCache<T> ln1;
  Mat<T> x1, qkv, ctx;
  std::vector<Mat<T>> probs;
  // mlp
  LnCache<T> ln2;
  Mat<T> x2, u, act;
};

template <class T>
struct ForwardCache {
  std::vector<Mat<T>> features;
  std::vector<EncoderCache<T>> enc;
  std::vector<LayerCache<T>> layers;
  LnCache<T> lnf;
  Mat<T> xf;
};

struct ForwardOptions {
  bool cross_attention = true;
};

/// Causal decoder over the token sequence. At each placeholder, on every
/// layer except the last, the image's cross-attention output is added to the
/// residual stream before that layer's self-attention. Returns L x V logits.
template <class T>
Mat<T> forward(const SequenceInput& x, const Weights<T>& w, const ModelConfig& cfg,
               std::type_identity_t<ForwardCache<T>>* cache = nullptr,
               ForwardOptions opt = {}) {
  check_input(x, cfg);
  const int n = static_cast<int>(x.tokens.size());
  const int H = cfg.hidden, nh = cfg.heads, hd = cfg.head_dim();
  const T scale = T(1) / std::sqrt(static_cast<T>(hd));
  ForwardCache<T> local;
  ForwardCache<T>& c = cache ? *cache : local;
  c = ForwardCache<T>{};

  const bool use_images = opt.cross_attention && !x.images.empty();
  if (use_images) {
    c.features.resize(x.images.size());
    c.enc.resize(x.images.size());
    for (std::size_t i = 0; i < x.images.size(); ++i)
      c.features[i] = encode_image(*x.images[i], w, cfg, cache ? &c.enc[i] : nullptr);
  }

  Mat<T> h(n, H);
  for (int p = 0; p < n; ++p) h.row(p) = w.tok_emb.row(x.tokens[static_cast<std::size_t>(p)]) + w.pos_emb.row(p);

  c.layers.resize(w.layers.size());
  for (std::size_t l = 0; l < w.layers.size(); ++l) {
    const auto& L = w.layers[l];
    auto& lc = c.layers[l];
    if (L.cross && use_images) {
      lc.keys.resize(x.images.size());
      lc.values.resize(x.images.size());
      for (std::size_t i = 0; i < x.images.size(); ++i) {
        lc.keys[i] = c.features[i] * L.xk;
        lc.values[i] = c.features[i] * L.xv;
      }
      lc.xln.resize(x.placeholders.size());
      lc.xin.resize(x.placeholders.size());
      lc.xres.resize(x.placeholders.size());
      for (std::size_t k = 0; k < x.placeholders.size(); ++k) {
        const auto& ph = x.placeholders[k];
        const Mat<T> hj = h.row(ph.position);
        lc.xin[k] = layer_norm(hj, L.ln1_g, L.ln1_b, &lc.xln[k]);
        const auto img = static_cast<std::size_t>(ph.image);
        lc.xres[k] = cross_attention<T>(lc.keys[img], lc.values[img], RowVec<T>(lc.xin[k]), L);
        h.row(ph.position) += lc.xres[k].delta;
      }
    }

    lc.x1 = layer_norm(h, L.ln1_g, L.ln1_b, &lc.ln1);
    lc.qkv = lc.x1 * L.attn_w;
    lc.qkv.rowwise() += L.attn_b.row(0);
    lc.ctx.resize(n, H);
    lc.probs.resize(static_cast<std::size_t>(nh));
    for (int hh = 0; hh < nh; ++hh) {
      const auto q = lc.qkv.middleCols(hh * hd, hd);
      const auto k = lc.qkv.middleCols(H + hh * hd, hd);
      const auto v = lc.qkv.middleCols(2 * H + hh * hd, hd);
      Mat<T> s = (q * k.transpose()) * scale;
      for (int i = 0; i < n; ++i) {
        auto row = s.row(i);
        softmax_inplace(row.head(i + 1));
        row.tail(n - i - 1).setZero();
      }
      lc.ctx.middleCols(hh * hd, hd).noalias() = s * v;
      lc.probs[static_cast<std::size_t>(hh)] = std::move(s);
    }
    Mat<T> attn_out = lc.ctx * L.proj_w;
    attn_out.rowwise() += L.proj_b.row(0);
    h += attn_out;

    lc.x2 = layer_norm(h, L.ln2_g, L.ln2_b, &lc.ln2);
    lc.u = lc.x2 * L.fc1_w;
    lc.u.rowwise() += L.fc1_b.row(0);
    lc.act = gelu(lc.u);
    Mat<T> mlp_out = lc.act * L.fc2_w;
    mlp_out.rowwise() += L.fc2_b.row(0);
    h += mlp_out;
  }

  c.xf = layer_norm(h, w.lnf_g, w.lnf_b, &c.lnf);
  Mat<T> logits = c.xf * w.head_w;
  logits.rowwise() += w.head_b.row(0);
  return logits;
}

/// Mean cross-entropy over masked-in rows. Throws EmptyMask.
template <class T>
T masked_ce(const Mat<T>& logits, const std::vector<TokenId>& targets, const std::vector<bool>& mask,
            Mat<T>* dlogits = nullptr) {
  if (targets.size() != static_cast<std::size_t>(logits.rows()) || mask.size() != targets.size())
    throw ShapeMismatch("logits/targets/mask length mismatch");
  std::size_t count = 0;
  for (bool m : mask) count += m ? 1 : 0;
  if (count == 0) throw EmptyMask("loss mask selects no positions");
  if (dlogits) dlogits->setZero(logits.rows(), logits.cols());
  T total = 0;
  const T inv = T(1) / static_cast<T>(count);
  for (Eigen::Index r = 0; r < logits.rows(); ++r) {
    if (!mask[static_cast<std::size_t>(r)]) continue;
    const auto t = targets[static_cast<std::size_t>(r)];
    if (t < 0 || t >= logits.cols()) throw ShapeMismatch("target id out of range");
    const T m = logits.row(r).maxCoeff();
    const RowVec<T> e = (logits.row(r).array() - m).exp().matrix();
    const T z = e.sum();
    total += std::log(z) + m - logits(r, t);
    if (dlogits) {
      dlogits->row(r) = e * (inv / z);
      (*dlogits)(r, t) -= inv;
    }
  }
  return total * inv;
}

/// Forward, loss, and reverse pass. Accumulates weight * dLoss/dparam into
/// `grads` (which must be shaped like `w`) and returns the loss.
template <class T>
T backward(const SequenceInput& x, const std::vector<TokenId>& targets, const std::vector<bool>& mask,
           const Weights<T>& w, const ModelConfig& cfg, Weights<T>& grads, T weight = T(1)) {
  ForwardCache<T> c;
  const Mat<T> logits = forward(x, w, cfg, &c);
  Mat<T> dlogits;
  const T loss = masked_ce(logits, targets, mask, &dlogits);
  dlogits *= weight;

  const int n = static_cast<int>(x.tokens.size());
  const int H = cfg.hidden, nh = cfg.heads, hd = cfg.head_dim();
  const T scale = T(1) / std::sqrt(static_cast<T>(hd));

  grads.head_w.noalias() += c.xf.transpose() * dlogits;
  grads.head_b.row(0) += dlogits.colwise().sum();
  Mat<T> dh = layer_norm_backward(Mat<T>(dlogits * w.head_w.transpose()), c.lnf, w.lnf_g, grads.lnf_g, grads.lnf_b);

  std::vector<Mat<T>> dfeat(c.features.size());
  for (std::size_t i = 0; i < c.features.size(); ++i) dfeat[i] = Mat<T>::Zero(c.features[i].rows(), c.features[i].cols());

  for (std::size_t l = w.layers.size(); l-- > 0;) {
    const auto& L = w.layers[l];
    auto& G = grads.layers[l];
    const auto& lc = c.layers[l];

    // mlp
    G.fc2_w.noalias() += lc.act.transpose() * dh;
    G.fc2_b.row(0) += dh.colwise().sum();
    Mat<T> du = (dh * L.fc2_w.transpose()).array() * lc.u.unaryExpr([](T v) { return gelu_grad(v); }).array();
    G.fc1_w.noalias() += lc.x2.transpose() * du;
    G.fc1_b.row(0) += du.colwise().sum();
    dh += layer_norm_backward(Mat<T>(du * L.fc1_w.transpose()), lc.ln2, L.ln2_g, G.ln2_g, G.ln2_b);

    // self-attention
    G.proj_w.noalias() += lc.ctx.transpose() * dh;
    G.proj_b.row(0) += dh.colwise().sum();
    const Mat<T> dctx = dh * L.proj_w.transpose();
    Mat<T> dqkv(n, 3 * H);
    for (int hh = 0; hh < nh; ++hh) {
      const auto& P = lc.probs[static_cast<std::size_t>(hh)];
      const auto q = lc.qkv.middleCols(hh * hd, hd);
      const auto k = lc.qkv.middleCols(H + hh * hd, hd);
      const auto v = lc.qkv.middleCols(2 * H + hh * hd, hd);
      const auto dc = dctx.middleCols(hh * hd, hd);
      Mat<T> dp = dc * v.transpose();
      dqkv.middleCols(2 * H + hh * hd, hd).noalias() = P.transpose() * dc;
      const ColVec<T> rs = (dp.array() * P.array()).rowwise().sum();
      Mat<T> ds = (P.array() * (dp.colwise() - rs).array()) * scale;
      dqkv.middleCols(hh * hd, hd).noalias() = ds * k;
      dqkv.middleCols(H + hh * hd, hd).noalias() = ds.transpose() * q;
    }
    G.attn_w.noalias() += lc.x1.transpose() * dqkv;
    G.attn_b.row(0) += dqkv.colwise().sum();
    dh += layer_norm_backward(Mat<T>(dqkv * L.attn_w.transpose()), lc.ln1, L.ln1_g, G.ln1_g, G.ln1_b);

    // cross-attention at placeholders; dh at row j already holds dL/dh_j after the add
    if (L.cross && !lc.xres.empty()) {
      std::vector<Mat<T>> dk(lc.keys.size()), dv(lc.values.size());
      for (std::size_t i = 0; i < lc.keys.size(); ++i) {
        dk[i] = Mat<T>::Zero(lc.keys[i].rows(), lc.keys[i].cols());
        dv[i] = Mat<T>::Zero(lc.values[i].rows(), lc.values[i].cols());
      }
      const T xscale = T(1) / std::sqrt(static_cast<T>(H));
      for (std::size_t k = 0; k < lc.xres.size(); ++k) {
        const auto& ph = x.placeholders[k];
        const auto img = static_cast<std::size_t>(ph.image);
        const auto& r = lc.xres[k];
        const RowVec<T> ddelta = dh.row(ph.position);
        G.xo.noalias() += r.context.transpose() * ddelta;
        const RowVec<T> dcon = ddelta * L.xo.transpose();
        const ColVec<T> da = lc.values[img] * dcon.transpose();
        dv[img].noalias() += r.weights * dcon;
        const ColVec<T> ds = (r.weights.array() * (da.array() - r.weights.dot(da))).matrix() * xscale;
        const RowVec<T> dq = ds.transpose() * lc.keys[img];
        dk[img].noalias() += ds * r.q;
        G.xq.noalias() += lc.xin[k].transpose() * dq;
        const Mat<T> dxin = dq * L.xq.transpose();
        dh.row(ph.position) += layer_norm_backward(dxin, lc.xln[k], L.ln1_g, G.ln1_g, G.ln1_b);
      }
      for (std::size_t i = 0; i < lc.keys.size(); ++i) {
        G.xk.noalias() += c.features[i].transpose() * dk[i];
        G.xv.noalias() += c.features[i].transpose() * dv[i];
        dfeat[i].noalias() += dk[i] * L.xk.transpose() + dv[i] * L.xv.transpose();
      }
    }
  }

  for (int p = 0; p < n; ++p) {
    grads.tok_emb.row(x.tokens[static_cast<std::size_t>(p)]) += dh.row(p);
    grads.pos_emb.row(p) += dh.row(p);
  }
  if (!cfg.freeze_encoder)
    for (std::size_t i = 0; i < c.features.size(); ++i) encode_image_backward(dfeat[i], c.enc[i], w, cfg, grads);
  return loss;
}

}  // namespace painter::nn
