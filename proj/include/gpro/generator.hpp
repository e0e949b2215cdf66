#pragma once

#include <algorithm>
#include <cstdint>
#include <numeric>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "gpro/common.hpp"
#include "gpro/graph.hpp"

namespace gpro {

// Synthetic planted-motif benchmark. Each graph is a class-determining motif
// (a chorded cycle whose length grows with the class index) glued onto an
// Erdos-Renyi background whose uniform one-hot "color" is spuriously
// correlated with the label at a controlled rate.
struct BiasSpec {
  int num_classes = 4;
  double bias_degree = 0.9;       // P(background color == label) in biased splits
  int bg_min = 8;
  int bg_max = 16;
  double bg_edge_prob = 0.3;
  int attach_edges = 2;
  double feature_noise_std = 0.05;
  int train_size = 800;
  int val_size = 200;
  int test_size = 400;
  uint64_t seed = 1;

  int feature_dim() const { return num_classes + 1; }

  void validate() const {
    if (num_classes < 2) throw ConfigError("BiasSpec: num_classes must be >= 2");
    if (bias_degree <= 0.0 || bias_degree > 1.0)
      throw ConfigError("BiasSpec: bias_degree must be in (0,1]");
    if (bg_min < 3) throw ConfigError("BiasSpec: bg_min must be >= 3");
    if (bg_max < bg_min) throw ConfigError("BiasSpec: bg_max < bg_min");
    if (bg_edge_prob <= 0.0 || bg_edge_prob >= 1.0)
      throw ConfigError("BiasSpec: bg_edge_prob must be in (0,1)");
    if (attach_edges < 1) throw ConfigError("BiasSpec: attach_edges must be >= 1");
    if (feature_noise_std < 0.0) throw ConfigError("BiasSpec: negative noise std");
    if (train_size < num_classes || val_size < num_classes || test_size < num_classes)
      throw ConfigError("BiasSpec: split sizes must be >= num_classes");
  }
};

// Motif for class c: cycle of length 3+c with a chord between nodes 0 and
// floor((3+c)/2). At c=0 the chord duplicates a cycle edge, leaving a plain
// triangle. Sizes differ per class, so motifs are pairwise non-isomorphic.
inline std::vector<Edge> motif_edges(int c) {
  const int k = 3 + c;
  std::set<Edge> es;
  for (int i = 0; i < k; ++i) es.insert(make_edge(i, (i + 1) % k));
  es.insert(make_edge(0, k / 2));
  return {es.begin(), es.end()};
}

inline int motif_size(int c) { return 3 + c; }

inline bool is_connected(int n, const std::vector<Edge>& edges) {
  if (n == 0) return false;
  std::vector<std::vector<int>> adj(n);
  for (const Edge& e : edges) {
    adj[e.first].push_back(e.second);
    adj[e.second].push_back(e.first);
  }
  std::vector<char> seen(n, 0);
  std::vector<int> stack = {0};
  seen[0] = 1;
  int count = 1;
  while (!stack.empty()) {
    int u = stack.back();
    stack.pop_back();
    for (int v : adj[u])
      if (!seen[v]) {
        seen[v] = 1;
        ++count;
        stack.push_back(v);
      }
  }
  return count == n;
}

// Brute-force graph isomorphism on node counts small enough to permute.
// The motif library short-circuits on size, but the check is honest.
inline bool graphs_isomorphic(int na, const std::vector<Edge>& ea, int nb,
                              const std::vector<Edge>& eb) {
  if (na != nb || ea.size() != eb.size()) return false;
  std::set<Edge> target(eb.begin(), eb.end());
  std::vector<int> perm(na);
  std::iota(perm.begin(), perm.end(), 0);
  do {
    bool ok = true;
    for (const Edge& e : ea) {
      if (!target.count(make_edge(perm[e.first], perm[e.second]))) {
        ok = false;
        break;
      }
    }
    if (ok) return true;
  } while (std::next_permutation(perm.begin(), perm.end()));
  return false;
}

// One graph: motif(c) + connected ER background + attach_edges bridges.
// Feature layout (F = C+1): columns [0,C) are the color block, column C is a
// reserved marker that stays exactly zero so no causal label can leak
// through features. Motif nodes carry noise only; background nodes carry a
// shared one-hot color plus noise.
//
// Biased color draw: label color with probability bias_degree, otherwise
// uniform over the other C-1 colors, so the empirical agreement rate equals
// bias_degree. Unbiased draw: uniform over all C colors.
inline Graph generate_graph(const BiasSpec& spec, int c, bool biased, std::mt19937_64& rng) {
  spec.validate();
  if (c < 0 || c >= spec.num_classes)
    throw std::invalid_argument("generate_graph: class out of range");
  const int k = motif_size(c);
  Graph g;
  g.label = c;
  g.causal_edges = motif_edges(c);
  g.edges = g.causal_edges;

  std::uniform_int_distribution<int> bg_size(spec.bg_min, spec.bg_max);
  const int b = bg_size(rng);
  g.n = k + b;

  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::vector<Edge> bg;
  do {
    bg.clear();
    for (int i = 0; i < b; ++i)
      for (int j = i + 1; j < b; ++j)
        if (unit(rng) < spec.bg_edge_prob) bg.emplace_back(i, j);
  } while (!is_connected(b, bg));
  for (const Edge& e : bg) g.edges.push_back(make_edge(e.first + k, e.second + k));

  std::uniform_int_distribution<int> pick_motif(0, k - 1);
  std::uniform_int_distribution<int> pick_bg(0, b - 1);
  std::set<Edge> attach;
  while (int(attach.size()) < spec.attach_edges)
    attach.insert(make_edge(pick_motif(rng), k + pick_bg(rng)));
  for (const Edge& e : attach) g.edges.push_back(e);
  std::sort(g.edges.begin(), g.edges.end());

  int color;
  if (biased) {
    if (unit(rng) < spec.bias_degree) {
      color = c;
    } else {
      std::uniform_int_distribution<int> other(0, spec.num_classes - 2);
      color = other(rng);
      if (color >= c) ++color;
    }
  } else {
    std::uniform_int_distribution<int> any(0, spec.num_classes - 1);
    color = any(rng);
  }
  g.bg_color = color;

  const int F = spec.feature_dim();
  g.features = Matrix(g.n, F);
  std::normal_distribution<double> noise(0.0, spec.feature_noise_std);
  for (int i = 0; i < g.n; ++i) {
    if (i >= k) g.features(i, color) = 1.0;
    for (int j = 0; j < spec.num_classes; ++j) g.features(i, j) += noise(rng);
  }
  return g;
}

struct DatasetSplits {
  std::vector<Graph> train, val, test;
};

// Class-balanced splits, fully deterministic from the seed. Train and val
// use the biased color draw; test is always unbiased. Every graph draws
// from its own stream seeded by seed ^ global-index, so generation order
// (or parallelism) cannot change the output.
inline DatasetSplits generate_dataset(const BiasSpec& spec) {
  spec.validate();
  DatasetSplits out;
  uint64_t index = 0;
  auto fill = [&](std::vector<Graph>& dst, int count, bool biased) {
    for (int i = 0; i < count; ++i, ++index) {
      std::mt19937_64 rng(spec.seed ^ index);
      dst.push_back(generate_graph(spec, i % spec.num_classes, biased, rng));
    }
  };
  fill(out.train, spec.train_size, true);
  fill(out.val, spec.val_size, true);
  fill(out.test, spec.test_size, false);
  return out;
}

// Fraction of graphs whose background color matches the label
// (generator metadata; colors are per-graph constant).
inline double color_label_agreement(const std::vector<Graph>& graphs) {
  if (graphs.empty()) return 0.0;
  int agree = 0;
  for (const Graph& g : graphs) agree += (g.bg_color == g.label);
  return double(agree) / double(graphs.size());
}

}  // namespace gpro
