#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace hfr {

/// Scales grad in place so its L2 norm is at most max_norm. Returns the norm
/// before clipping.
double clip_global_norm(std::span<double> grad, double max_norm);

/// Adam with bias correction: m = b1 m + (1-b1) g, v = b2 v + (1-b2) g^2,
/// p -= lr * m_hat / (sqrt(v_hat) + eps).
class Adam {
 public:
  explicit Adam(std::size_t n, double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8);

  void step(std::span<double> params, std::span<const double> grad, double lr);
  long steps() const { return t_; }

 private:
  double beta1_, beta2_, eps_;
  std::vector<double> m_, v_;
  long t_ = 0;
};

}  // namespace hfr
