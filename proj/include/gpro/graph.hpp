#pragma once

#include <algorithm>
#include <cmath>
#include <utility>
#include <vector>

#include "gpro/matrix.hpp"

namespace gpro {

// Undirected edge with u < v, node indices local to one graph.
using Edge = std::pair<int, int>;

inline Edge make_edge(int u, int v) { return u < v ? Edge{u, v} : Edge{v, u}; }

struct Graph {
  int n = 0;
  std::vector<Edge> edges;  // sorted lexicographically, no duplicates
  Matrix features;          // n x F
  int label = 0;

  // Generator-only metadata; not serialized.
  std::vector<Edge> causal_edges;
  int bg_color = -1;

  Matrix adjacency() const {
    Matrix A(n, n);
    for (const Edge& e : edges) {
      A(e.first, e.second) = 1.0;
      A(e.second, e.first) = 1.0;
    }
    return A;
  }

  std::vector<int> degrees() const {
    std::vector<int> d(n, 0);
    for (const Edge& e : edges) {
      ++d[e.first];
      ++d[e.second];
    }
    return d;
  }
};

// A minibatch assembled as one block-diagonal graph.
struct GraphBatch {
  int num_graphs = 0;
  int num_nodes = 0;
  std::vector<int> offsets;                // size num_graphs + 1
  Matrix features;                         // num_nodes x F
  std::vector<int> labels;
  std::vector<std::vector<Edge>> edges;    // per graph, local indices

  std::vector<std::pair<int, int>> node_ranges() const {
    std::vector<std::pair<int, int>> r;
    for (int g = 0; g < num_graphs; ++g) r.emplace_back(offsets[g], offsets[g + 1]);
    return r;
  }

  std::vector<int> graph_sizes() const {
    std::vector<int> s;
    for (int g = 0; g < num_graphs; ++g) s.push_back(offsets[g + 1] - offsets[g]);
    return s;
  }

  // Full block adjacency (tests and inspection; training uses BlockDiag).
  Matrix block_adjacency() const {
    Matrix A(num_nodes, num_nodes);
    for (int g = 0; g < num_graphs; ++g) {
      const int off = offsets[g];
      for (const Edge& e : edges[g]) {
        A(off + e.first, off + e.second) = 1.0;
        A(off + e.second, off + e.first) = 1.0;
      }
    }
    return A;
  }
};

inline GraphBatch make_batch(const std::vector<Graph>& graphs) {
  if (graphs.empty()) throw std::invalid_argument("make_batch: empty input");
  GraphBatch b;
  b.num_graphs = int(graphs.size());
  b.offsets.push_back(0);
  int F = graphs[0].features.cols;
  for (const Graph& g : graphs) b.offsets.push_back(b.offsets.back() + g.n);
  b.num_nodes = b.offsets.back();
  b.features = Matrix(b.num_nodes, F);
  for (size_t gi = 0; gi < graphs.size(); ++gi) {
    const Graph& g = graphs[gi];
    const int off = b.offsets[gi];
    for (int i = 0; i < g.n; ++i)
      for (int j = 0; j < F; ++j) b.features(off + i, j) = g.features(i, j);
    b.labels.push_back(g.label);
    b.edges.push_back(g.edges);
  }
  return b;
}

inline GraphBatch make_batch(const std::vector<Graph>& graphs, const std::vector<int>& idx) {
  std::vector<Graph> sel;
  sel.reserve(idx.size());
  for (int i : idx) sel.push_back(graphs[i]);
  return make_batch(sel);
}

// D^{-1/2} (A + I) D^{-1/2} per graph, with D taken from A + I. Self-loops
// keep isolated nodes well-defined.
inline BlockDiag normalized_adjacency(const std::vector<std::vector<Edge>>& edges,
                                      const std::vector<int>& sizes) {
  std::vector<Matrix> blocks;
  blocks.reserve(sizes.size());
  for (size_t g = 0; g < sizes.size(); ++g) {
    const int n = sizes[g];
    Matrix A(n, n);
    for (const Edge& e : edges[g]) {
      A(e.first, e.second) = 1.0;
      A(e.second, e.first) = 1.0;
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

// Raw degrees per node across the whole batch, from the per-graph edge lists.
inline std::vector<double> batch_degrees(const std::vector<std::vector<Edge>>& edges,
                                         const std::vector<int>& offsets) {
  std::vector<double> deg(offsets.back(), 0.0);
  for (size_t g = 0; g < edges.size(); ++g) {
    const int off = offsets[g];
    for (const Edge& e : edges[g]) {
      deg[off + e.first] += 1.0;
      deg[off + e.second] += 1.0;
    }
  }
  return deg;
}

}  // namespace gpro
