#pragma once

#include "painter/nn/transformer.hpp"

namespace painter::nn {

/// Token-at-a-time decoding with a per-generation key/value cache. Feeding a
/// sequence step by step yields the same logits as forward() on the whole.
template <class T>
class IncrementalDecoder {
 public:
  IncrementalDecoder(const Weights<T>& w, const ModelConfig& cfg) : w_(w), cfg_(cfg) {
    for (std::size_t l = 0; l < w.layers.size(); ++l) {
      keys_.emplace_back(cfg.ctx_len, cfg.hidden);
      values_.emplace_back(cfg.ctx_len, cfg.hidden);
    }
  }

  int position() const { return pos_; }

  /// Feeds one token; `image` must be given exactly for placeholder tokens.
  /// Returns next-token logits.
  RowVec<T> step(TokenId token, const Canvas* image = nullptr) {
    if (pos_ >= cfg_.ctx_len) throw ContextOverflow("decoder context of " + std::to_string(cfg_.ctx_len) + " exhausted");
    if (token < 0 || token >= cfg_.vocab) throw ShapeMismatch("token id out of range");
    if ((token == Vocab::kPlaceholderId) != (image != nullptr))
      throw ShapeMismatch("images bind to placeholder tokens only");
    const int H = cfg_.hidden, nh = cfg_.heads, hd = cfg_.head_dim();
    const T scale = T(1) / std::sqrt(static_cast<T>(hd));
    Mat<T> h = w_.tok_emb.row(token) + w_.pos_emb.row(pos_);
    Mat<T> feat;
    if (image) {
      feat = encode_image(*image, w_, cfg_);
      cross_weights_.clear();
    }
    for (std::size_t l = 0; l < w_.layers.size(); ++l) {
      const auto& L = w_.layers[l];
      if (L.cross && image) {
        const Mat<T> xin = layer_norm(h, L.ln1_g, L.ln1_b);
        auto r = cross_attention<T>(feat, RowVec<T>(xin), L);
        h += r.delta;
        cross_weights_.push_back(std::move(r.weights));
      }
      const Mat<T> x1 = layer_norm(h, L.ln1_g, L.ln1_b);
      RowVec<T> qkv = x1 * L.attn_w + L.attn_b;
      keys_[l].row(pos_) = qkv.segment(H, H);
      values_[l].row(pos_) = qkv.segment(2 * H, H);
      RowVec<T> ctx(H);
      for (int hh = 0; hh < nh; ++hh) {
        const auto kk = keys_[l].block(0, hh * hd, pos_ + 1, hd);
        const auto vv = values_[l].block(0, hh * hd, pos_ + 1, hd);
        ColVec<T> s = (kk * qkv.segment(hh * hd, hd).transpose()) * scale;
        softmax_inplace(s);
        ctx.segment(hh * hd, hd) = s.transpose() * vv;
      }
      h += ctx * L.proj_w + L.proj_b;
      const Mat<T> x2 = layer_norm(h, L.ln2_g, L.ln2_b);
      RowVec<T> u = x2 * L.fc1_w + L.fc1_b;
      h += gelu(Mat<T>(u)) * L.fc2_w + L.fc2_b;
    }
    ++pos_;
    return layer_norm(h, w_.lnf_g, w_.lnf_b) * w_.head_w + w_.head_b;
  }

  /// Cross-attention weights (one G*G column per cross layer) from the most
  /// recent placeholder.
  const std::vector<ColVec<T>>& last_cross_weights() const { return cross_weights_; }

 private:
  const Weights<T>& w_;
  ModelConfig cfg_;
  std::vector<Mat<T>> keys_, values_;
  std::vector<ColVec<T>> cross_weights_;
  int pos_ = 0;
};

}  // namespace painter::nn
