#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

namespace mapfuse {

struct AdamWConfig {
  double lr = 1e-2;
  double weight_decay = 0.0;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

/// Decoupled-weight-decay adaptive-moment optimizer with lazy sparse
/// semantics: only slots touched in a step advance their moments and step
/// counts, so rarely-visited grid entries accumulate no moment decay.
/// A slot covers `stride` consecutive parameters (grid feature vectors);
/// dense parameter sets use stride 1.
template <class Scalar>
class AdamW {
 public:
  AdamW() = default;
  AdamW(size_t param_count, int stride) { init(param_count, stride); }

  void init(size_t param_count, int stride) {
    if (stride < 1 || param_count % size_t(stride) != 0)
      throw std::invalid_argument("adamw: bad stride");
    stride_ = stride;
    m_.assign(param_count, Scalar(0));
    v_.assign(param_count, Scalar(0));
    step_.assign(param_count / size_t(stride), 0);
  }

  size_t param_count() const { return m_.size(); }

  /// Updates every slot.
  void update_dense(Scalar* params, const Scalar* grads,
                    const AdamWConfig& cfg, double lr_mult = 1.0) {
    for (int64_t s = 0; s < int64_t(step_.size()); ++s)
      update_slot(s, params, grads, cfg, lr_mult);
  }

  /// Updates only the listed slots (callers pass each slot at most once).
  void update_slots(Scalar* params, const Scalar* grads,
                    const std::vector<int64_t>& slots, const AdamWConfig& cfg,
                    double lr_mult = 1.0) {
    for (const int64_t s : slots) update_slot(s, params, grads, cfg, lr_mult);
  }

 private:
  void update_slot(int64_t slot, Scalar* params, const Scalar* grads,
                   const AdamWConfig& cfg, double lr_mult) {
    const int32_t t = ++step_[slot];
    const double bc1 = 1.0 - std::pow(cfg.beta1, double(t));
    const double bc2 = 1.0 - std::pow(cfg.beta2, double(t));
    const double lr = cfg.lr * lr_mult;
    for (int k = 0; k < stride_; ++k) {
      const size_t i = size_t(slot) * stride_ + k;
      const double g = double(grads[i]);
      const double m = cfg.beta1 * double(m_[i]) + (1.0 - cfg.beta1) * g;
      const double v = cfg.beta2 * double(v_[i]) + (1.0 - cfg.beta2) * g * g;
      m_[i] = Scalar(m);
      v_[i] = Scalar(v);
      const double update = (m / bc1) / (std::sqrt(v / bc2) + cfg.eps);
      params[i] = Scalar(double(params[i]) -
                         lr * (update + cfg.weight_decay * double(params[i])));
    }
  }

  int stride_ = 1;
  std::vector<Scalar> m_, v_;
  std::vector<int32_t> step_;
};

/// Scales grads in place so their global norm is at most max_norm.
template <class Scalar>
void clip_global_norm(Scalar* grads, size_t n, double max_norm) {
  if (max_norm <= 0.0) return;
  double sq = 0.0;
  for (size_t i = 0; i < n; ++i) sq += double(grads[i]) * double(grads[i]);
  const double norm = std::sqrt(sq);
  if (norm <= max_norm) return;
  const double scale = max_norm / norm;
  for (size_t i = 0; i < n; ++i) grads[i] = Scalar(double(grads[i]) * scale);
}

}  // namespace mapfuse
