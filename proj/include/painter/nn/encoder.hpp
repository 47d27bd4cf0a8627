#pragma once

#include <numbers>

#include "painter/canvas.hpp"
#include "painter/nn/weights.hpp"

namespace painter::nn {

/// Rearranges a channels-last square map (rows = y*side + x) into one row
/// per non-overlapping k x k patch, columns ordered (dy, dx, channel).
template <class T>
Mat<T> patchify(const Mat<T>& a, int side, int k) {
  const int ch = static_cast<int>(a.cols());
  const int out = side / k;
  Mat<T> p(out * out, k * k * ch);
  for (int oy = 0; oy < out; ++oy)
    for (int ox = 0; ox < out; ++ox)
      for (int dy = 0; dy < k; ++dy)
        for (int dx = 0; dx < k; ++dx)
          p.block(oy * out + ox, (dy * k + dx) * ch, 1, ch) = a.row((oy * k + dy) * side + ox * k + dx);
  return p;
}

template <class T>
Mat<T> unpatchify(const Mat<T>& p, int side, int k, int ch) {
  const int out = side / k;
  Mat<T> a(side * side, ch);
  for (int oy = 0; oy < out; ++oy)
    for (int ox = 0; ox < out; ++ox)
      for (int dy = 0; dy < k; ++dy)
        for (int dx = 0; dx < k; ++dx)
          a.row((oy * k + dy) * side + ox * k + dx) = p.block(oy * out + ox, (dy * k + dx) * ch, 1, ch);
  return a;
}

/// Ink intensity (1 - byte/255) gathered directly into first-layer patches.
template <class T>
Mat<T> canvas_patches(const Canvas& c, int k) {
  const int out = Canvas::kSize / k;
  Mat<T> p(out * out, k * k * 3);
  const auto bytes = c.bytes();
  for (int oy = 0; oy < out; ++oy)
    for (int ox = 0; ox < out; ++ox) {
      T* row = p.row(oy * out + ox).data();
      for (int dy = 0; dy < k; ++dy)
        for (int dx = 0; dx < k; ++dx) {
          const std::size_t src = (static_cast<std::size_t>(oy * k + dy) * Canvas::kSize +
                                   static_cast<std::size_t>(ox * k + dx)) * 3;
          for (int ch = 0; ch < 3; ++ch)
            *row++ = T(1) - static_cast<T>(bytes[src + static_cast<std::size_t>(ch)]) / T(255);
        }
    }
  return p;
}

/// Fixed 2-D sinusoidal code: pos_dim/4 frequencies per axis, sin and cos.
template <class T>
Mat<T> image_positions(int grid, int pos_dim) {
  Mat<T> pe(grid * grid, pos_dim);
  const int nf = pos_dim / 4;
  for (int y = 0; y < grid; ++y)
    for (int x = 0; x < grid; ++x)
      for (int f = 0; f < nf; ++f) {
        const double w = std::numbers::pi * std::pow(2.0, f) / grid;
        const auto r = y * grid + x;
        pe(r, 4 * f + 0) = static_cast<T>(std::sin(w * (x + 0.5)));
        pe(r, 4 * f + 1) = static_cast<T>(std::cos(w * (x + 0.5)));
        pe(r, 4 * f + 2) = static_cast<T>(std::sin(w * (y + 0.5)));
        pe(r, 4 * f + 3) = static_cast<T>(std::cos(w * (y + 0.5)));
      }
  return pe;
}

template <class T>
struct EncoderCache {
  std::array<Mat<T>, 4> inputs;  // patch matrices fed to each convolution
  std::array<Mat<T>, 3> pre;     // pre-activations of the three hidden convolutions
};

/// (G^2) x (F + P) image features.
template <class T>
Mat<T> encode_image(const Canvas& c, const Weights<T>& w, const ModelConfig& cfg, EncoderCache<T>* cache = nullptr) {
  int side = Canvas::kSize / cfg.first_stride();
  Mat<T> x = canvas_patches<T>(c, cfg.first_stride());
  Mat<T> out;
  for (std::size_t k = 0; k < 4; ++k) {
    Mat<T> z = x * w.conv_w[k];
    z.rowwise() += w.conv_b[k].row(0);
    if (cache) cache->inputs[k] = x;
    if (k == 3) {
      out = std::move(z);
      break;
    }
    Mat<T> a = gelu(z);
    if (cache) cache->pre[k] = std::move(z);
    x = patchify(a, side, 2);
    side /= 2;
  }
  Mat<T> f(out.rows(), cfg.image_dim());
  f.leftCols(cfg.feat) = out;
  f.rightCols(cfg.pos_dim) = image_positions<T>(cfg.grid, cfg.pos_dim);
  return f;
}

/// Accumulates encoder parameter gradients from dL/df.
template <class T>
void encode_image_backward(const Mat<T>& df, const EncoderCache<T>& cache, const Weights<T>& w,
                           const ModelConfig& cfg, Weights<T>& g) {
  Mat<T> dz = df.leftCols(cfg.feat);
  int side = cfg.grid;
  for (int k = 3; k >= 0; --k) {
    const auto ku = static_cast<std::size_t>(k);
    g.conv_w[ku].noalias() += cache.inputs[ku].transpose() * dz;
    g.conv_b[ku].row(0) += dz.colwise().sum();
    if (k == 0) break;
    const Mat<T> dx = dz * w.conv_w[ku].transpose();
    side *= 2;
    const Mat<T> da = unpatchify(dx, side, 2, static_cast<int>(cache.pre[ku - 1].cols()));
    dz = da.array() * cache.pre[ku - 1].unaryExpr([](T v) { return gelu_grad(v); }).array();
  }
}

}  // namespace painter::nn
