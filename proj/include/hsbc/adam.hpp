#pragma once

#include <Eigen/Dense>

namespace hsbc {

/// Adam moment estimates for one parameter vector.
class Adam {
 public:
  explicit Adam(Eigen::Index dim, double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8)
      : m_(Eigen::VectorXd::Zero(dim)), v_(Eigen::VectorXd::Zero(dim)),
        beta1_(beta1), beta2_(beta2), eps_(eps) {}

  void reset() {
    m_.setZero();
    v_.setZero();
    p1_ = p2_ = 1.0;
  }

  /// theta += lr * m_hat / (sqrt(v_hat) + eps), moving along `direction`.
  void step(Eigen::VectorXd& theta, const Eigen::VectorXd& direction, double lr) {
    m_ = beta1_ * m_ + (1.0 - beta1_) * direction;
    v_ = beta2_ * v_ + (1.0 - beta2_) * direction.cwiseProduct(direction);
    p1_ *= beta1_;
    p2_ *= beta2_;
    const Eigen::ArrayXd m_hat = m_.array() / (1.0 - p1_);
    const Eigen::ArrayXd v_hat = v_.array() / (1.0 - p2_);
    theta.array() += lr * m_hat / (v_hat.sqrt() + eps_);
  }

 private:
  Eigen::VectorXd m_, v_;
  double beta1_, beta2_, eps_;
  double p1_ = 1.0, p2_ = 1.0;
};

}  // namespace hsbc
