#pragma once

#include <cmath>

#include <Eigen/Dense>

namespace painter::nn {

template <class T>
using Mat = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <class T>
using RowVec = Eigen::Matrix<T, 1, Eigen::Dynamic>;
template <class T>
using ColVec = Eigen::Matrix<T, Eigen::Dynamic, 1>;

inline constexpr double kLnEps = 1e-5;

// tanh approximation of GELU
template <class T>
T gelu(T u) {
  constexpr T c = T(0.7978845608028654);
  return T(0.5) * u * (T(1) + std::tanh(c * (u + T(0.044715) * u * u * u)));
}

template <class T>
T gelu_grad(T u) {
  constexpr T c = T(0.7978845608028654);
  const T t = std::tanh(c * (u + T(0.044715) * u * u * u));
  return T(0.5) * (T(1) + t) + T(0.5) * u * (T(1) - t * t) * c * (T(1) + T(3 * 0.044715) * u * u);
}

template <class T>
Mat<T> gelu(const Mat<T>& u) {
  return u.unaryExpr([](T v) { return gelu(v); });
}

/// Layer norm over each row. Keeps the normalized rows and inverse std for
/// the backward pass.
template <class T>
struct LnCache {
  Mat<T> xhat;
  ColVec<T> rstd;
};

template <class T>
Mat<T> layer_norm(const Mat<T>& x, const Mat<T>& g, const Mat<T>& b, LnCache<T>* cache = nullptr) {
  const auto n = x.cols();
  Mat<T> xhat(x.rows(), n);
  ColVec<T> rstd(x.rows());
  for (Eigen::Index r = 0; r < x.rows(); ++r) {
    const T mean = x.row(r).mean();
    const auto centered = (x.row(r).array() - mean).matrix();
    const T var = centered.squaredNorm() / T(n);
    rstd(r) = T(1) / std::sqrt(var + T(kLnEps));
    xhat.row(r) = centered * rstd(r);
  }
  Mat<T> y = (xhat.array().rowwise() * g.row(0).array()).rowwise() + b.row(0).array();
  if (cache) {
    cache->xhat = std::move(xhat);
    cache->rstd = std::move(rstd);
  }
  return y;
}

/// Returns dx; accumulates into dg and db.
template <class T>
Mat<T> layer_norm_backward(const Mat<T>& dy, const LnCache<T>& c, const Mat<T>& g, Mat<T>& dg, Mat<T>& db) {
  dg.row(0) += (dy.array() * c.xhat.array()).colwise().sum().matrix();
  db.row(0) += dy.colwise().sum();
  const Mat<T> dxhat = dy.array().rowwise() * g.row(0).array();
  const T n = T(dy.cols());
  Mat<T> dx(dy.rows(), dy.cols());
  for (Eigen::Index r = 0; r < dy.rows(); ++r) {
    const T m1 = dxhat.row(r).sum() / n;
    const T m2 = dxhat.row(r).dot(c.xhat.row(r)) / n;
    dx.row(r) = ((dxhat.row(r).array() - m1 - c.xhat.row(r).array() * m2) * c.rstd(r)).matrix();
  }
  return dx;
}

/// In-place numerically stable softmax of a row vector.
template <class Derived>
void softmax_inplace(Eigen::MatrixBase<Derived>&& v) {
  const auto m = v.maxCoeff();
  v = (v.array() - m).exp().matrix();
  v /= v.sum();
}

template <class Derived>
void softmax_inplace(Eigen::MatrixBase<Derived>& v) {
  const auto m = v.maxCoeff();
  v = (v.array() - m).exp().matrix();
  v /= v.sum();
}

}  // namespace painter::nn
