#pragma once

#include <numeric>
#include <random>
#include <vector>

#include "gpro/common.hpp"
#include "gpro/ops.hpp"

namespace gpro {

// Counterfactual representations built from the non-causal half of the
// batch: a row permutation, and a per-sample mean/std swap driven by the
// same permutation. The causal half is never touched.
struct CounterfactualBundle {
  std::vector<int> idx;   // permutation of [0, N)
  Value z_per;            // Z_n rows reordered by idx
  Value z_smv;            // Z_n renormalized to the partner's row statistics
  std::vector<int> permuted_labels;
};

// Uniform random permutation of the batch; a batch of one degenerates to
// the identity with a recorded warning.
inline std::vector<int> draw_permutation(int n, std::mt19937_64& rng) {
  std::vector<int> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  if (n < 2) {
    record_warning("permute: batch of " + std::to_string(n) + ", identity permutation");
    return idx;
  }
  for (int i = n - 1; i > 0; --i) {
    std::uniform_int_distribution<int> d(0, i);
    std::swap(idx[i], idx[d(rng)]);
  }
  return idx;
}

inline Value permute_noncausal(const Value& z_n, const std::vector<int>& idx) {
  return gather_rows(z_n, idx);
}

// Z_smv[i] = sigma_per[i] * (Z_n[i] - mu[i]) / sigma[i] + mu_per[i], with
// per-sample statistics over the feature axis. The std op already floors
// the variance, so constant rows stay finite and differentiable.
inline Value swap_mean_variance(const Value& z_n, const Value& z_per) {
  if (z_n.rows() != z_per.rows() || z_n.cols() != z_per.cols())
    throw std::invalid_argument("swap_mean_variance: shape mismatch " +
                                z_n.data().shape_str() + " vs " + z_per.data().shape_str());
  Value mu = row_mean(z_n);
  Value sd = row_std(z_n);
  Value mu_p = row_mean(z_per);
  Value sd_p = row_std(z_per);
  return add(mul(div(sub(z_n, mu), sd), sd_p), mu_p);
}

inline CounterfactualBundle make_counterfactuals(const Value& z_n,
                                                 const std::vector<int>& labels,
                                                 std::mt19937_64& rng) {
  CounterfactualBundle b;
  b.idx = draw_permutation(z_n.rows(), rng);
  b.z_per = permute_noncausal(z_n, b.idx);
  b.z_smv = swap_mean_variance(z_n, b.z_per);
  b.permuted_labels.reserve(b.idx.size());
  for (int i : b.idx) b.permuted_labels.push_back(labels[i]);
  return b;
}

}  // namespace gpro
