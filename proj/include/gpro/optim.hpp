#pragma once

#include <cmath>
#include <vector>

#include "gpro/checkpoint.hpp"

namespace gpro {

// Standard Adam with bias correction. Grads are zeroed after each step.
// With m = v = 0 (never-touched or all-zero gradients) the update is
// exactly zero because the bias-corrected numerator vanishes.
class Adam {
 public:
  explicit Adam(double lr = 0.01, double beta1 = 0.9, double beta2 = 0.999,
                double eps = 1e-8)
      : lr_(lr), beta1_(beta1), beta2_(beta2), eps_(eps) {}

  void step(ParamStore& store) {
    auto& params = store.items();
    if (m_.empty()) {
      m_.resize(params.size());
      v_.resize(params.size());
      for (size_t i = 0; i < params.size(); ++i) {
        const Matrix& d = params[i].value.data();
        m_[i] = Matrix(d.rows, d.cols);
        v_[i] = Matrix(d.rows, d.cols);
      }
    }
    ++t_;
    const double bc1 = 1.0 - std::pow(beta1_, double(t_));
    const double bc2 = 1.0 - std::pow(beta2_, double(t_));
    for (size_t i = 0; i < params.size(); ++i) {
      Parameter& p = params[i];
      if (!p.trainable) continue;
      Matrix& d = p.value.data();
      const Matrix& g = p.value.grad();
      if (g.empty()) continue;  // never touched by backward
      for (int k = 0; k < d.size(); ++k) {
        m_[i].a[k] = beta1_ * m_[i].a[k] + (1.0 - beta1_) * g.a[k];
        v_[i].a[k] = beta2_ * v_[i].a[k] + (1.0 - beta2_) * g.a[k] * g.a[k];
        const double mhat = m_[i].a[k] / bc1;
        const double vhat = v_[i].a[k] / bc2;
        d.a[k] -= lr_ * mhat / (std::sqrt(vhat) + eps_);
      }
      p.value.zero_grad();
    }
  }

  long steps() const { return t_; }
  double lr() const { return lr_; }

 private:
  double lr_, beta1_, beta2_, eps_;
  long t_ = 0;
  std::vector<Matrix> m_, v_;
};

}  // namespace gpro
