#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <string>
#include <vector>

#include "gpro/checkpoint.hpp"
#include "gpro/graph.hpp"
#include "gpro/ops.hpp"

namespace gpro {

// Node and edge scoring MLPs of one context inference block. Both are single
// hidden layer, relu, width d. The node MLP consumes [degree ; h] (d+1
// inputs); the edge MLP consumes [cos(q_i,q_j) ; q_i ; q_j] (2d+1 inputs)
// and emits one logit per directed edge.
struct AttentionMlps {
  Value nW1, nb1, nW2, nb2;
  Value eW1, eb1, eW2, eb2;

  static AttentionMlps create(ParamStore& store, const std::string& prefix, int d,
                              std::mt19937_64& rng) {
    AttentionMlps a;
    a.nW1 = store.add(prefix + ".node.W1", xavier_uniform(d + 1, d, rng));
    a.nb1 = store.add(prefix + ".node.b1", Matrix(1, d));
    a.nW2 = store.add(prefix + ".node.W2", xavier_uniform(d, d, rng));
    a.nb2 = store.add(prefix + ".node.b2", Matrix(1, d));
    a.eW1 = store.add(prefix + ".edge.W1", xavier_uniform(2 * d + 1, d, rng));
    a.eb1 = store.add(prefix + ".edge.b1", Matrix(1, d));
    a.eW2 = store.add(prefix + ".edge.W2", xavier_uniform(d, 1, rng));
    a.eb2 = store.add(prefix + ".edge.b2", Matrix(1, 1));
    return a;
  }
};

// q_i = MLP_node([deg_i ; h_i]); degrees come from the adjacency the block
// receives, passed in as a raw column.
inline Value node_encoding(const AttentionMlps& p, const Value& h,
                           const std::vector<double>& degrees) {
  if (int(degrees.size()) != h.rows())
    throw std::invalid_argument("node_encoding: degree count mismatch");
  Matrix deg(h.rows(), 1);
  for (int i = 0; i < h.rows(); ++i) deg(i, 0) = degrees[i];
  Value in = concat_cols(Value::constant(deg), h);
  Value hidden = relu(add(matmul(in, p.nW1), p.nb1));
  return add(matmul(hidden, p.nW2), p.nb2);
}

// Flattened undirected edge list of a batch: graph by graph, each list
// already sorted lexicographically. Edge k of graph g appears once; the
// global node index pair is (off+u, off+v).
struct EdgeFlat {
  std::vector<int> heads, tails;   // global node indices, u < v
  std::vector<int> graph_of;       // owning graph per edge
  std::vector<int> per_graph_begin;  // size graphs+1

  static EdgeFlat build(const std::vector<std::vector<Edge>>& edges,
                        const std::vector<int>& offsets) {
    EdgeFlat f;
    f.per_graph_begin.push_back(0);
    for (size_t g = 0; g < edges.size(); ++g) {
      for (const Edge& e : edges[g]) {
        f.heads.push_back(offsets[g] + e.first);
        f.tails.push_back(offsets[g] + e.second);
        f.graph_of.push_back(int(g));
      }
      f.per_graph_begin.push_back(int(f.heads.size()));
    }
    return f;
  }

  int count() const { return int(heads.size()); }
};

// Symmetrized edge attention: alpha_ij = sigmoid(MLP_edge([cos; q_i; q_j]))
// evaluated in both orientations and averaged, one score per undirected
// edge, aligned with the flattened edge list.
inline Value edge_attention(const AttentionMlps& p, const Value& q, const EdgeFlat& ef) {
  const int m = ef.count();
  if (m == 0) throw std::invalid_argument("edge_attention: empty input");
  std::vector<int> is(2 * m), js(2 * m);
  for (int k = 0; k < m; ++k) {
    is[k] = ef.heads[k];
    js[k] = ef.tails[k];
    is[m + k] = ef.tails[k];
    js[m + k] = ef.heads[k];
  }
  Value qi = gather_rows(q, is);
  Value qj = gather_rows(q, js);
  Value dots = row_sum(mul(qi, qj));
  Value norms = mul(sqrt(row_sum(mul(qi, qi))), sqrt(row_sum(mul(qj, qj))));
  Value cosv = div(dots, add(norms, 1e-8));
  Value feat = concat_cols(cosv, concat_cols(qi, qj));
  Value hidden = relu(add(matmul(feat, p.eW1), p.eb1));
  Value alpha = sigmoid(add(matmul(hidden, p.eW2), p.eb2));
  std::vector<int> fwd(m), bwd(m);
  std::iota(fwd.begin(), fwd.end(), 0);
  std::iota(bwd.begin(), bwd.end(), m);
  return mul(add(gather_rows(alpha, fwd), gather_rows(alpha, bwd)), 0.5);
}

// Dense symmetric score matrix for inspection; zero where no edge.
inline Matrix dense_scores(const Matrix& scores, const EdgeFlat& ef, int num_nodes) {
  Matrix E(num_nodes, num_nodes);
  for (int k = 0; k < ef.count(); ++k) {
    E(ef.heads[k], ef.tails[k]) = scores(k, 0);
    E(ef.tails[k], ef.heads[k]) = scores(k, 0);
  }
  return E;
}

enum class MaskMode { KeepHigh, KeepLow };

// Per-graph rank selection: keep k = max(1, floor(rho * m_g)) undirected
// edges per graph, highest or lowest scored depending on the tower. Ties
// break toward the lexicographically smaller edge index. The result is a
// keep flag per flattened edge.
inline std::vector<char> rank_mask(const Matrix& scores, const EdgeFlat& ef, double rho,
                                   MaskMode mode) {
  if (rho <= 0.0 || rho > 1.0) throw std::invalid_argument("rank_mask: rho must be in (0,1]");
  std::vector<char> keep(ef.count(), 0);
  const int num_graphs = int(ef.per_graph_begin.size()) - 1;
  for (int g = 0; g < num_graphs; ++g) {
    const int b = ef.per_graph_begin[g];
    const int e = ef.per_graph_begin[g + 1];
    const int mg = e - b;
    if (mg == 0) continue;
    int k = int(std::floor(rho * mg + 1e-9));
    if (k < 1) {
      record_warning("rank_mask: retention clamped to 1 edge (rho=" + std::to_string(rho) +
                     ", edges=" + std::to_string(mg) + ")");
      k = 1;
    }
    std::vector<int> order(mg);
    std::iota(order.begin(), order.end(), b);
    std::sort(order.begin(), order.end(), [&](int x, int y) {
      const double sx = scores(x, 0), sy = scores(y, 0);
      if (sx != sy) return mode == MaskMode::KeepHigh ? sx > sy : sx < sy;
      return x < y;
    });
    for (int i = 0; i < k; ++i) keep[order[i]] = 1;
  }
  return keep;
}

}  // namespace gpro
