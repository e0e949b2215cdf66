#pragma once

#include <random>
#include <string>

#include "gpro/config.hpp"
#include "gpro/losses.hpp"
#include "gpro/tower.hpp"

namespace gpro {

constexpr uint64_t kInitSeedSalt = 0x9E3779B97F4A7C15ull;

// The full dual-tower model: a causal tower retaining the highest-attention
// edges, a parameter-disjoint non-causal tower retaining the lowest, and two
// linear classifiers over the concatenated readouts.
class GproModel {
 public:
  GproModel(const TrainConfig& cfg, int feat_dim) : feat_dim_(feat_dim) {
    std::mt19937_64 rng(cfg.seed ^ kInitSeedSalt);
    cfg_c_.num_blocks = cfg.num_blocks;
    cfg_c_.rhos = cfg.rho_blocks(true);
    cfg_c_.mode = MaskMode::KeepHigh;
    cfg_c_.hidden_dim = cfg.hidden_dim;
    cfg_c_.soft_mask = cfg.soft_mask;
    cfg_c_.normalize_degree = cfg.normalize_degree;
    cfg_n_ = cfg_c_;
    cfg_n_.rhos = cfg.rho_blocks(false);
    cfg_n_.mode = MaskMode::KeepLow;
    tower_c_ = TowerParams::create(store_, "tower_c", feat_dim, cfg.hidden_dim,
                                   cfg.num_blocks, rng);
    tower_n_ = TowerParams::create(store_, "tower_n", feat_dim, cfg.hidden_dim,
                                   cfg.num_blocks, rng);
    clf_ = Classifiers::create(store_, 2 * cfg.hidden_dim, cfg.num_classes, rng);
  }

  struct Forward {
    TowerState tc, tn;
  };

  Forward forward(const GraphBatch& batch, bool training) {
    Forward f;
    f.tc = run_tower(tower_c_, cfg_c_, batch, training);
    f.tn = run_tower(tower_n_, cfg_n_, batch, training);
    return f;
  }

  // Prediction head at inference: argmax of the causal classifier over the
  // full concatenation; the non-causal head is discarded.
  std::vector<int> predict(const GraphBatch& batch) {
    Forward f = forward(batch, /*training=*/false);
    Value logits = clf_.causal_logits(concat_cols(f.tc.Z, f.tn.Z));
    std::vector<int> out(batch.num_graphs);
    for (int i = 0; i < batch.num_graphs; ++i) {
      int best = 0;
      for (int j = 1; j < logits.cols(); ++j)
        if (logits.data()(i, j) > logits.data()(i, best)) best = j;
      out[i] = best;
    }
    return out;
  }

  ParamStore& store() { return store_; }
  Classifiers& classifiers() { return clf_; }
  TowerParams& tower_c() { return tower_c_; }
  TowerParams& tower_n() { return tower_n_; }
  const TowerConfig& tower_cfg_c() const { return cfg_c_; }
  const TowerConfig& tower_cfg_n() const { return cfg_n_; }
  int feat_dim() const { return feat_dim_; }

 private:
  int feat_dim_;
  ParamStore store_;
  TowerParams tower_c_, tower_n_;
  TowerConfig cfg_c_, cfg_n_;
  Classifiers clf_;
};

// Plain 2-layer GCN with mean readout and a linear head; the debiasing
// comparison baseline, trained with cross-entropy only.
class BaselineGcn {
 public:
  BaselineGcn(const TrainConfig& cfg, int feat_dim) {
    std::mt19937_64 rng(cfg.seed ^ kInitSeedSalt);
    l1_ = GnnLayer::create(store_, "gcn.layer1", feat_dim, cfg.hidden_dim, rng);
    l2_ = GnnLayer::create(store_, "gcn.layer2", cfg.hidden_dim, cfg.hidden_dim, rng);
    W_ = store_.add("gcn.head.W", xavier_uniform(cfg.hidden_dim, cfg.num_classes, rng));
    b_ = store_.add("gcn.head.b", Matrix(1, cfg.num_classes));
  }

  Value forward(const GraphBatch& batch, bool training) {
    BlockDiag ahat = normalized_adjacency(batch.edges, batch.graph_sizes());
    Value h = l1_.forward(ahat, Value::constant(batch.features), training);
    h = l2_.forward(ahat, h, training);
    Value z = mean_pool_rows(h, batch.node_ranges());
    return add(matmul(z, W_), b_);
  }

  std::vector<int> predict(const GraphBatch& batch) {
    Value logits = forward(batch, /*training=*/false);
    std::vector<int> out(batch.num_graphs);
    for (int i = 0; i < batch.num_graphs; ++i) {
      int best = 0;
      for (int j = 1; j < logits.cols(); ++j)
        if (logits.data()(i, j) > logits.data()(i, best)) best = j;
      out[i] = best;
    }
    return out;
  }

  ParamStore& store() { return store_; }

 private:
  ParamStore store_;
  GnnLayer l1_, l2_;
  Value W_, b_;
};

}  // namespace gpro
