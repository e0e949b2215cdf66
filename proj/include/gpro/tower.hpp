#pragma once

#include <random>
#include <string>
#include <vector>

#include "gpro/attention.hpp"
#include "gpro/gnn.hpp"
#include "gpro/graph.hpp"

namespace gpro {

struct TowerConfig {
  int num_blocks = 2;
  std::vector<double> rhos;  // one retention fraction per block
  MaskMode mode = MaskMode::KeepHigh;
  int hidden_dim = 32;
  bool soft_mask = false;        // off by default: hard {0,1} selection
  bool normalize_degree = false; // degree column divided by (n_g - 1)

  void validate() const {
    if (num_blocks < 1) throw ConfigError("TowerConfig: num_blocks must be >= 1");
    if (int(rhos.size()) != num_blocks)
      throw ConfigError("TowerConfig: need one rho per block");
    for (double r : rhos)
      if (r <= 0.0 || r > 1.0) throw ConfigError("TowerConfig: rho must be in (0,1]");
  }
};

struct BlockParams {
  GnnLayer gnn;
  AttentionMlps attn;
};

// One inference tower: L context blocks plus a 2-layer GCN readout encoder.
struct TowerParams {
  std::vector<BlockParams> blocks;
  GnnLayer enc1, enc2;

  static TowerParams create(ParamStore& store, const std::string& prefix, int feat_dim,
                            int d, int num_blocks, std::mt19937_64& rng) {
    TowerParams t;
    for (int l = 0; l < num_blocks; ++l) {
      const std::string bp = prefix + ".block" + std::to_string(l + 1);
      BlockParams b;
      b.gnn = GnnLayer::create(store, bp + ".gnn", l == 0 ? feat_dim : d, d, rng);
      b.attn = AttentionMlps::create(store, bp + ".attn", d, rng);
      t.blocks.push_back(std::move(b));
    }
    t.enc1 = GnnLayer::create(store, prefix + ".enc1", d, d, rng);
    t.enc2 = GnnLayer::create(store, prefix + ".enc2", d, d, rng);
    return t;
  }
};

// Everything one block produced, kept for the consistency loss and tests.
struct BlockTrace {
  std::vector<std::vector<Edge>> edges_in;  // adjacency entering the block
  EdgeFlat flat;                            // flattened view of edges_in
  Value H;                                  // node features after the GNN layer
  Value scores;                             // per-undirected-edge attention
  std::vector<char> keep;                   // rank-mask result
  std::vector<std::vector<Edge>> edges_out; // surviving adjacency
};

struct TowerState {
  std::vector<BlockTrace> blocks;
  std::vector<std::vector<Edge>> final_edges;
  Value H_final;  // node features entering the readout encoder
  Value Z;        // graph-level representations, num_graphs x d
};

namespace detail {

// Soft mode keeps the same selection but carries the attention value as the
// edge weight into the next adjacency; hard mode uses plain 0/1 edges.
inline BlockDiag weighted_adjacency(const std::vector<std::vector<Edge>>& edges,
                                    const std::vector<std::vector<double>>& weights,
                                    const std::vector<int>& sizes) {
  std::vector<Matrix> blocks;
  for (size_t g = 0; g < sizes.size(); ++g) {
    const int n = sizes[g];
    Matrix A(n, n);
    for (size_t k = 0; k < edges[g].size(); ++k) {
      const Edge& e = edges[g][k];
      A(e.first, e.second) = weights[g][k];
      A(e.second, e.first) = weights[g][k];
    }
    for (int i = 0; i < n; ++i) A(i, i) += 1.0;
    std::vector<double> dinv(n);
    for (int i = 0; i < n; ++i) {
      double deg = 0.0;
      for (int j = 0; j < n; ++j) deg += A(i, j);
      dinv[i] = 1.0 / std::sqrt(deg);
    }
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) A(i, j) *= dinv[i] * dinv[j];
    blocks.push_back(std::move(A));
  }
  return BlockDiag::from_blocks(std::move(blocks));
}

}  // namespace detail

// Progressive inference: per block, update node features on the current
// adjacency, score its edges, rank-select the retained fraction per graph,
// and hand the pruned adjacency to the next block. The mask itself is a
// non-differentiable selection; gradients flow through H and the scores.
inline TowerState run_tower(TowerParams& params, const TowerConfig& cfg,
                            const GraphBatch& batch, bool training) {
  cfg.validate();
  if (int(params.blocks.size()) != cfg.num_blocks)
    throw std::invalid_argument("run_tower: block parameter count mismatch");
  TowerState st;
  const std::vector<int> sizes = batch.graph_sizes();
  std::vector<std::vector<Edge>> edges = batch.edges;
  std::vector<std::vector<double>> weights;  // soft mode only
  Value h = Value::constant(batch.features);

  for (int l = 0; l < cfg.num_blocks; ++l) {
    BlockTrace tr;
    tr.edges_in = edges;
    tr.flat = EdgeFlat::build(edges, batch.offsets);
    BlockDiag ahat = (cfg.soft_mask && l > 0)
                         ? detail::weighted_adjacency(edges, weights, sizes)
                         : normalized_adjacency(edges, sizes);
    h = params.blocks[l].gnn.forward(ahat, h, training);
    tr.H = h;

    std::vector<double> deg = batch_degrees(edges, batch.offsets);
    if (cfg.normalize_degree) {
      for (int g = 0; g < batch.num_graphs; ++g)
        for (int i = batch.offsets[g]; i < batch.offsets[g + 1]; ++i)
          deg[i] /= std::max(1, sizes[g] - 1);
    }
    Value q = node_encoding(params.blocks[l].attn, h, deg);
    tr.scores = edge_attention(params.blocks[l].attn, q, tr.flat);
    tr.keep = rank_mask(tr.scores.data(), tr.flat, cfg.rhos[l], cfg.mode);

    std::vector<std::vector<Edge>> kept(batch.num_graphs);
    std::vector<std::vector<double>> kept_w(batch.num_graphs);
    for (int k = 0; k < tr.flat.count(); ++k) {
      if (!tr.keep[k]) continue;
      const int g = tr.flat.graph_of[k];
      const int off = batch.offsets[g];
      kept[g].push_back(make_edge(tr.flat.heads[k] - off, tr.flat.tails[k] - off));
      kept_w[g].push_back(tr.scores.data()(k, 0));
    }
    tr.edges_out = kept;
    edges = std::move(kept);
    weights = std::move(kept_w);
    st.blocks.push_back(std::move(tr));
  }

  st.final_edges = edges;
  st.H_final = h;
  BlockDiag ahat_final = cfg.soft_mask ? detail::weighted_adjacency(edges, weights, sizes)
                                       : normalized_adjacency(edges, sizes);
  Value enc = params.enc2.forward(ahat_final, params.enc1.forward(ahat_final, h, training),
                                  training);
  st.Z = mean_pool_rows(enc, batch.node_ranges());
  return st;
}

}  // namespace gpro
