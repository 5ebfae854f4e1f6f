#pragma once

#include <cmath>

#include <Eigen/Dense>

namespace koopgait {

struct AdamConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

// First/second moment buffers for one parameter tensor.
template <typename M>
struct AdamMoments {
  M m;
  M v;
};

// Bias-corrected Adam. Call begin_step() once per optimisation step, then
// update() for each parameter tensor.
class Adam {
 public:
  explicit Adam(AdamConfig cfg) : cfg_(cfg) {}

  void begin_step() {
    ++t_;
    c1_ = 1.0 - std::pow(cfg_.beta1, static_cast<double>(t_));
    c2_ = 1.0 - std::pow(cfg_.beta2, static_cast<double>(t_));
  }

  template <typename M>
  void update(M& param, const M& grad, AdamMoments<M>& s) const {
    if (s.m.size() != grad.size()) {
      s.m = M::Zero(grad.rows(), grad.cols());
      s.v = M::Zero(grad.rows(), grad.cols());
    }
    s.m = cfg_.beta1 * s.m + (1.0 - cfg_.beta1) * grad;
    s.v = cfg_.beta2 * s.v + (1.0 - cfg_.beta2) * grad.cwiseProduct(grad);
    param.array() -= cfg_.lr * (s.m.array() / c1_) / ((s.v.array() / c2_).sqrt() + cfg_.eps);
  }

  long steps() const { return t_; }
  const AdamConfig& config() const { return cfg_; }

 private:
  AdamConfig cfg_;
  long t_ = 0;
  double c1_ = 1.0;
  double c2_ = 1.0;
};

}  // namespace koopgait
