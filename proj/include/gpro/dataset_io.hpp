#pragma once

#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "gpro/common.hpp"
#include "gpro/graph.hpp"

namespace gpro {

// Textual dataset format:
//   #graphs <N> <C> <F>
//   graph <label> <n> <m>
//   <F floats>            (n rows, 9 significant digits)
//   <u v>                 (m rows, u < v, ascending)
// LF endings, space separated.
inline void save_dataset(const std::string& path, const std::vector<Graph>& graphs,
                         int num_classes, int feat_dim) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open dataset for writing: " + path);
  f << "#graphs " << graphs.size() << " " << num_classes << " " << feat_dim << "\n";
  char buf[48];
  for (const Graph& g : graphs) {
    f << "graph " << g.label << " " << g.n << " " << g.edges.size() << "\n";
    for (int i = 0; i < g.n; ++i) {
      for (int j = 0; j < feat_dim; ++j) {
        std::snprintf(buf, sizeof buf, "%.9g", g.features(i, j));
        f << (j ? " " : "") << buf;
      }
      f << "\n";
    }
    for (const Edge& e : g.edges) f << e.first << " " << e.second << "\n";
  }
  if (!f) throw std::runtime_error("write failed: " + path);
}

struct LoadedDataset {
  std::vector<Graph> graphs;
  int num_classes = 0;
  int feat_dim = 0;
};

inline LoadedDataset load_dataset(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw ParseError("cannot open dataset: " + path);
  int lineno = 0;
  std::string line;
  auto next_line = [&](const char* what) {
    if (!std::getline(f, line))
      throw ParseError(path + ": line " + std::to_string(lineno + 1) +
                       ": unexpected end of file (expected " + what + ")");
    ++lineno;
  };

  next_line("header");
  LoadedDataset ds;
  size_t count = 0;
  {
    std::istringstream ss(line);
    std::string tag;
    if (!(ss >> tag >> count >> ds.num_classes >> ds.feat_dim) || tag != "#graphs")
      throw ParseError(path + ": line 1: expected '#graphs <N> <C> <F>'");
  }
  for (size_t gi = 0; gi < count; ++gi) {
    next_line("graph header");
    Graph g;
    size_t m = 0;
    {
      std::istringstream ss(line);
      std::string tag;
      if (!(ss >> tag >> g.label >> g.n >> m) || tag != "graph")
        throw ParseError(path + ": line " + std::to_string(lineno) +
                         ": expected 'graph <label> <n> <m>'");
    }
    if (g.label < 0 || g.label >= ds.num_classes)
      throw ParseError(path + ": line " + std::to_string(lineno) + ": label out of range");
    if (g.n <= 0)
      throw ParseError(path + ": line " + std::to_string(lineno) + ": bad node count");
    g.features = Matrix(g.n, ds.feat_dim);
    for (int i = 0; i < g.n; ++i) {
      next_line("feature row");
      std::istringstream ss(line);
      for (int j = 0; j < ds.feat_dim; ++j)
        if (!(ss >> g.features(i, j)))
          throw ParseError(path + ": line " + std::to_string(lineno) +
                           ": expected " + std::to_string(ds.feat_dim) + " features");
    }
    for (size_t e = 0; e < m; ++e) {
      next_line("edge");
      std::istringstream ss(line);
      int u = 0, v = 0;
      if (!(ss >> u >> v))
        throw ParseError(path + ": line " + std::to_string(lineno) + ": expected 'u v'");
      if (u < 0 || v < 0 || u >= g.n || v >= g.n || u >= v)
        throw ParseError(path + ": line " + std::to_string(lineno) +
                         ": bad edge " + std::to_string(u) + " " + std::to_string(v));
      g.edges.emplace_back(u, v);
    }
    ds.graphs.push_back(std::move(g));
  }
  return ds;
}

}  // namespace gpro
