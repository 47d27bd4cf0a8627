#pragma once

#include "painter/nn/weights.hpp"

namespace painter::nn {

struct AdamParams {
  double lr = 3e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

template <class T>
struct AdamState {
  Weights<T> m, v;
  std::int64_t step = 0;
};

template <class T>
AdamState<T> adam_init(const ModelConfig& cfg) {
  return {zero_weights<T>(cfg), zero_weights<T>(cfg), 0};
}

/// Bias-corrected Adam update, in place.
template <class T>
void adam_step(Weights<T>& w, Weights<T>& g, AdamState<T>& s, const AdamParams& p) {
  ++s.step;
  const double c1 = 1.0 - std::pow(p.beta1, static_cast<double>(s.step));
  const double c2 = 1.0 - std::pow(p.beta2, static_cast<double>(s.step));
  auto pw = tensors(w), pg = tensors(g), pm = tensors(s.m), pv = tensors(s.v);
  const T b1 = static_cast<T>(p.beta1), b2 = static_cast<T>(p.beta2);
  const T lr = static_cast<T>(p.lr), eps = static_cast<T>(p.eps);
  const T ic1 = static_cast<T>(1.0 / c1), ic2 = static_cast<T>(1.0 / c2);
  for (std::size_t t = 0; t < pw.size(); ++t) {
    auto m = pm[t]->array();
    auto v = pv[t]->array();
    const auto gr = pg[t]->array();
    m = b1 * m + (T(1) - b1) * gr;
    v = b2 * v + (T(1) - b2) * gr.square();
    pw[t]->array() -= lr * (m * ic1) / ((v * ic2).sqrt() + eps);
  }
}

template <class T>
double grad_norm(Weights<T>& g) {
  double sq = 0;
  for (auto* m : tensors(g)) sq += static_cast<double>(m->squaredNorm());
  return std::sqrt(sq);
}

/// Rescales g so its global L2 norm is at most max_norm. Returns the norm
/// before clipping.
template <class T>
double clip_grad_norm(Weights<T>& g, double max_norm) {
  const double n = grad_norm(g);
  if (max_norm > 0 && n > max_norm) {
    const T s = static_cast<T>(max_norm / n);
    for (auto* m : tensors(g)) *m *= s;
  }
  return n;
}

template <class T>
void zero_grads(Weights<T>& g) {
  for (auto* m : tensors(g)) m->setZero();
}

}  // namespace painter::nn
