#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "mapfuse/rng.hpp"

namespace mapfuse {

enum class Activation { kSoftplus100, kRelu };

/// Fixed-shape MLP: two hidden layers, linear output. Parameters live in one
/// flat vector (W0, b0, W1, b1, W2, b2; matrices column-major) so optimizer
/// state and serialization can treat them uniformly.
template <class Scalar>
class Mlp {
 public:
  using Mat = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  using ConstMap = Eigen::Map<const Mat>;
  using MutMap = Eigen::Map<Mat>;

  Mlp() = default;
  Mlp(int in_dim, int hidden, int out_dim, Activation act)
      : in_(in_dim), hidden_(hidden), out_(out_dim), act_(act) {
    if (in_dim < 1 || hidden < 1 || out_dim < 1)
      throw std::invalid_argument("bad mlp shape");
    off_w0_ = 0;
    off_b0_ = off_w0_ + size_t(hidden_) * in_;
    off_w1_ = off_b0_ + hidden_;
    off_b1_ = off_w1_ + size_t(hidden_) * hidden_;
    off_w2_ = off_b1_ + hidden_;
    off_b2_ = off_w2_ + size_t(out_) * hidden_;
    params_.assign(off_b2_ + out_, Scalar(0));
  }

  int in_dim() const { return in_; }
  int hidden_dim() const { return hidden_; }
  int out_dim() const { return out_; }
  size_t param_count() const { return params_.size(); }
  Scalar* params() { return params_.data(); }
  const Scalar* params() const { return params_.data(); }
  std::vector<Scalar>& param_vector() { return params_; }
  const std::vector<Scalar>& param_vector() const { return params_; }

  /// Layer-uniform fan-in init: W ~ U(-1/sqrt(fan_in), +1/sqrt(fan_in)),
  /// biases zero.
  void init_weights(Rng& rng) {
    auto fill = [&](size_t off, size_t n, double s) {
      for (size_t i = 0; i < n; ++i)
        params_[off + i] = Scalar(rng.uniform(-s, s));
    };
    fill(off_w0_, size_t(hidden_) * in_, 1.0 / std::sqrt(double(in_)));
    fill(off_b0_, hidden_, 0.0);
    fill(off_w1_, size_t(hidden_) * hidden_, 1.0 / std::sqrt(double(hidden_)));
    fill(off_b1_, hidden_, 0.0);
    fill(off_w2_, size_t(out_) * hidden_, 1.0 / std::sqrt(double(hidden_)));
    fill(off_b2_, out_, 0.0);
  }

  Scalar& bias_out(int k) { return params_[off_b2_ + k]; }

  struct Cache {
    Mat x, z0, z1, h0, h1;
  };

  /// Rows of x are samples. Returns n x out_dim.
  Mat forward(const Mat& x, Cache* cache = nullptr) const {
    const auto w0 = ConstMap(params_.data() + off_w0_, hidden_, in_);
    const auto w1 = ConstMap(params_.data() + off_w1_, hidden_, hidden_);
    const auto w2 = ConstMap(params_.data() + off_w2_, out_, hidden_);
    const auto b0 = ConstMap(params_.data() + off_b0_, hidden_, 1);
    const auto b1 = ConstMap(params_.data() + off_b1_, hidden_, 1);
    const auto b2 = ConstMap(params_.data() + off_b2_, out_, 1);

    Mat z0 = (x * w0.transpose()).rowwise() + b0.transpose().row(0);
    Mat h0 = activate(z0);
    Mat z1 = (h0 * w1.transpose()).rowwise() + b1.transpose().row(0);
    Mat h1 = activate(z1);
    Mat y = (h1 * w2.transpose()).rowwise() + b2.transpose().row(0);
    if (cache) {
      cache->x = x;
      cache->z0 = std::move(z0);
      cache->h0 = std::move(h0);
      cache->z1 = std::move(z1);
      cache->h1 = std::move(h1);
    }
    return y;
  }

  /// Accumulates parameter gradients into `grad` (same layout as params)
  /// and, when dx is non-null, writes d(loss)/d(input rows).
  void backward(const Cache& c, const Mat& dy, Scalar* grad,
                Mat* dx = nullptr) const {
    const auto w0 = ConstMap(params_.data() + off_w0_, hidden_, in_);
    const auto w1 = ConstMap(params_.data() + off_w1_, hidden_, hidden_);
    const auto w2 = ConstMap(params_.data() + off_w2_, out_, hidden_);

    MutMap dw0(grad + off_w0_, hidden_, in_);
    MutMap db0(grad + off_b0_, hidden_, 1);
    MutMap dw1(grad + off_w1_, hidden_, hidden_);
    MutMap db1(grad + off_b1_, hidden_, 1);
    MutMap dw2(grad + off_w2_, out_, hidden_);
    MutMap db2(grad + off_b2_, out_, 1);

    dw2.noalias() += dy.transpose() * c.h1;
    db2.col(0) += dy.colwise().sum().transpose();

    Mat dz1 = (dy * w2).cwiseProduct(activate_grad(c.z1));
    dw1.noalias() += dz1.transpose() * c.h0;
    db1.col(0) += dz1.colwise().sum().transpose();

    Mat dz0 = (dz1 * w1).cwiseProduct(activate_grad(c.z0));
    dw0.noalias() += dz0.transpose() * c.x;
    db0.col(0) += dz0.colwise().sum().transpose();

    if (dx) dx->noalias() = dz0 * w0;
  }

 private:
  Mat activate(const Mat& z) const {
    if (act_ == Activation::kRelu) return z.cwiseMax(Scalar(0));
    // softplus with beta = 100; linear past the saturation threshold
    return z.unaryExpr([](Scalar v) -> Scalar {
      const Scalar bz = Scalar(100) * v;
      if (bz > Scalar(20)) return v;
      if (bz < Scalar(-20)) return Scalar(0);
      return std::log1p(std::exp(bz)) / Scalar(100);
    });
  }

  Mat activate_grad(const Mat& z) const {
    if (act_ == Activation::kRelu)
      return z.unaryExpr(
          [](Scalar v) -> Scalar { return v > Scalar(0) ? Scalar(1) : Scalar(0); });
    return z.unaryExpr([](Scalar v) -> Scalar {
      const Scalar bz = Scalar(100) * v;
      if (bz > Scalar(20)) return Scalar(1);
      if (bz < Scalar(-20)) return Scalar(0);
      return Scalar(1) / (Scalar(1) + std::exp(-bz));
    });
  }

  int in_ = 0, hidden_ = 0, out_ = 0;
  Activation act_ = Activation::kSoftplus100;
  size_t off_w0_ = 0, off_b0_ = 0, off_w1_ = 0, off_b1_ = 0, off_w2_ = 0,
         off_b2_ = 0;
  std::vector<Scalar> params_;
};

}  // namespace mapfuse
