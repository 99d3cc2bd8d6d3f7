#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>

#include <Eigen/Core>

#include "svo/common.hpp"

namespace svo::nn {

/// Learning rate decaying linearly from `initial` to zero over training.
struct LinearSchedule {
  double initial = 3e-4;

  double at(double progress) const { return initial * (1.0 - std::clamp(progress, 0.0, 1.0)); }
};

struct AdamConfig {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

/// Bias-corrected Adam. Moments are sized lazily to the first parameter vector.
class Adam {
public:
  Adam() = default;
  explicit Adam(Eigen::Index size, AdamConfig cfg = {})
      : cfg_(cfg), m_(Eigen::VectorXd::Zero(size)), v_(Eigen::VectorXd::Zero(size)) {}

  void step(Eigen::VectorXd& params, const Eigen::VectorXd& grad, double lr) {
    if (grad.size() != params.size()) throw Error("Adam::step: gradient/parameter size mismatch");
    if (m_.size() == 0) {
      m_ = Eigen::VectorXd::Zero(params.size());
      v_ = Eigen::VectorXd::Zero(params.size());
    }
    if (m_.size() != params.size()) throw Error("Adam::step: moment/parameter size mismatch");
    ++t_;
    m_ = cfg_.beta1 * m_ + (1.0 - cfg_.beta1) * grad;
    v_ = cfg_.beta2 * v_ + (1.0 - cfg_.beta2) * grad.cwiseProduct(grad);
    const double c1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(t_));
    const double c2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(t_));
    params.array() -= lr * (m_.array() / c1) / ((v_.array() / c2).sqrt() + cfg_.eps);
  }

  const Eigen::VectorXd& first_moment() const { return m_; }
  const Eigen::VectorXd& second_moment() const { return v_; }
  std::int64_t steps() const { return t_; }

  /// Restore from a checkpoint.
  void restore(Eigen::VectorXd m, Eigen::VectorXd v, std::int64_t t) {
    if (m.size() != v.size()) throw Error("Adam::restore: moment sizes differ");
    m_ = std::move(m);
    v_ = std::move(v);
    t_ = t;
  }

private:
  AdamConfig cfg_;
  Eigen::VectorXd m_;
  Eigen::VectorXd v_;
  std::int64_t t_ = 0;
};

/// Rescale `grads` in place so their joint L2 norm is at most `max_norm`.
/// Returns the norm before clipping.
template <class... Vectors>
double clip_grad_norm(double max_norm, Vectors&... grads) {
  const double norm = std::sqrt((grads.squaredNorm() + ...));
  if (max_norm > 0.0 && norm > max_norm) {
    const double scale = max_norm / (norm + 1e-12);
    ((grads *= scale), ...);
  }
  return norm;
}

}  // namespace svo::nn
