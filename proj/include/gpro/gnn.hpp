#pragma once

#include <random>
#include <string>

#include "gpro/checkpoint.hpp"
#include "gpro/graph.hpp"
#include "gpro/ops.hpp"

namespace gpro {

constexpr double kBnEps = 1e-5;
constexpr double kBnMomentum = 0.9;

// Batch normalization over all nodes in the batch, per feature. Training
// mode normalizes by batch statistics (differentiable through them) and
// updates the running buffers; eval mode uses the frozen buffers.
inline Value batch_norm(const Value& x, const Value& gamma, const Value& beta,
                        Value& run_mean, Value& run_var, bool training) {
  if (training) {
    Value mu = col_mean(x);
    Value xc = sub(x, mu);
    Value var = col_mean(mul(xc, xc));
    Value out = add(mul(div(xc, sqrt(add(var, kBnEps))), gamma), beta);
    Matrix& rm = run_mean.data();
    Matrix& rv = run_var.data();
    for (int j = 0; j < rm.cols; ++j) {
      rm(0, j) = kBnMomentum * rm(0, j) + (1.0 - kBnMomentum) * mu.data()(0, j);
      rv(0, j) = kBnMomentum * rv(0, j) + (1.0 - kBnMomentum) * var.data()(0, j);
    }
    return out;
  }
  Matrix istd(1, run_var.data().cols);
  for (int j = 0; j < istd.cols; ++j)
    istd(0, j) = 1.0 / std::sqrt(run_var.data()(0, j) + kBnEps);
  Value xc = sub(x, Value::constant(run_mean.data()));
  return add(mul(mul(xc, Value::constant(istd)), gamma), beta);
}

// One graph-convolution layer: H = BN(relu(Ahat X W + b) + R(X)), where R is
// the identity when dimensions agree and a learned projection otherwise.
struct GnnLayer {
  int in_dim = 0, out_dim = 0;
  Value W, b, gamma, beta;
  Value run_mean, run_var;
  Value resid;  // defined only when in_dim != out_dim

  static GnnLayer create(ParamStore& store, const std::string& prefix, int in, int out,
                         std::mt19937_64& rng) {
    GnnLayer l;
    l.in_dim = in;
    l.out_dim = out;
    l.W = store.add(prefix + ".W", xavier_uniform(in, out, rng));
    l.b = store.add(prefix + ".b", Matrix(1, out));
    l.gamma = store.add(prefix + ".bn_gamma", Matrix(1, out, 1.0));
    l.beta = store.add(prefix + ".bn_beta", Matrix(1, out));
    l.run_mean = store.add(prefix + ".bn_run_mean", Matrix(1, out), /*trainable=*/false);
    l.run_var = store.add(prefix + ".bn_run_var", Matrix(1, out, 1.0), /*trainable=*/false);
    if (in != out) l.resid = store.add(prefix + ".resid", xavier_uniform(in, out, rng));
    return l;
  }

  Value forward(const BlockDiag& ahat, const Value& x, bool training) {
    Value h = relu(add(matmul(block_matmul(ahat, x), W), b));
    Value r = resid.defined() ? matmul(x, resid) : x;
    return batch_norm(add(h, r), gamma, beta, run_mean, run_var, training);
  }
};

}  // namespace gpro
