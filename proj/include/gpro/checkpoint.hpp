#pragma once

#include <cstdio>
#include <fstream>
#include <map>
#include <string>
#include <vector>

#include "gpro/value.hpp"

namespace gpro {

// A named learnable (or persistent, e.g. batch-norm running stats) tensor.
struct Parameter {
  std::string name;
  Value value;
  bool trainable = true;
};

// Owns every persistent tensor of a model in registration order. Names are
// unique; checkpoints are keyed by them.
class ParamStore {
 public:
  Value add(const std::string& name, Matrix init, bool trainable = true) {
    if (index_.count(name))
      throw std::invalid_argument("ParamStore: duplicate parameter name '" + name + "'");
    index_[name] = params_.size();
    params_.push_back({name, Value(std::move(init), trainable), trainable});
    return params_.back().value;
  }

  const std::vector<Parameter>& items() const { return params_; }
  std::vector<Parameter>& items() { return params_; }

  const Parameter& at(const std::string& name) const {
    auto it = index_.find(name);
    if (it == index_.end())
      throw std::invalid_argument("ParamStore: unknown parameter '" + name + "'");
    return params_[it->second];
  }

  void zero_grads() {
    for (Parameter& p : params_) p.value.zero_grad();
  }

  // Data copies for best-checkpoint tracking and thread-safe snapshots.
  std::vector<Matrix> snapshot() const {
    std::vector<Matrix> out;
    out.reserve(params_.size());
    for (const Parameter& p : params_) out.push_back(p.value.data());
    return out;
  }

  void restore(const std::vector<Matrix>& snap) {
    if (snap.size() != params_.size())
      throw std::invalid_argument("ParamStore::restore: snapshot size mismatch");
    for (size_t i = 0; i < snap.size(); ++i) params_[i].value.data() = snap[i];
  }

  // Textual checkpoint: 17 significant digits round-trips doubles exactly.
  void save(const std::string& path) const { save_snapshot(path, snapshot()); }

  void save_snapshot(const std::string& path, const std::vector<Matrix>& snap) const {
    std::ofstream f(path, std::ios::binary);  // binary: keep LF endings everywhere
    if (!f) throw std::runtime_error("cannot open checkpoint for writing: " + path);
    f << "gpro-ckpt v1\n";
    char buf[64];
    for (size_t i = 0; i < params_.size(); ++i) {
      const Parameter& p = params_[i];
      const Matrix& m = snap[i];
      f << "param " << p.name << " " << m.rows << " " << m.cols << "\n";
      for (int r = 0; r < m.rows; ++r) {
        for (int c = 0; c < m.cols; ++c) {
          std::snprintf(buf, sizeof buf, "%.17g", m(r, c));
          f << (c ? " " : "") << buf;
        }
        f << "\n";
      }
    }
    if (!f) throw std::runtime_error("write failed: " + path);
  }

  // Load into an already-built registry; every entry must be covered and
  // shapes must match.
  void load(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw ParseError("cannot open checkpoint: " + path);
    std::string header;
    std::getline(f, header);
    if (header != "gpro-ckpt v1")
      throw ParseError(path + ": bad checkpoint header '" + header + "'");
    std::vector<bool> seen(params_.size(), false);
    std::string tok;
    while (f >> tok) {
      if (tok != "param") throw ParseError(path + ": expected 'param', got '" + tok + "'");
      std::string name;
      int rows = 0, cols = 0;
      if (!(f >> name >> rows >> cols))
        throw ParseError(path + ": truncated parameter header");
      auto it = index_.find(name);
      if (it == index_.end()) throw ParseError(path + ": unknown parameter '" + name + "'");
      Matrix& m = params_[it->second].value.data();
      if (m.rows != rows || m.cols != cols)
        throw ParseError(path + ": shape mismatch for '" + name + "': expected " +
                         m.shape_str() + ", got " + std::to_string(rows) + "x" +
                         std::to_string(cols));
      for (int i = 0; i < m.size(); ++i)
        if (!(f >> m.a[i]))
          throw ParseError(path + ": truncated values for '" + name + "'");
      seen[it->second] = true;
    }
    for (size_t i = 0; i < params_.size(); ++i)
      if (!seen[i])
        throw ParseError(path + ": missing parameter '" + params_[i].name + "'");
  }

 private:
  std::vector<Parameter> params_;
  std::map<std::string, size_t> index_;
};

}  // namespace gpro
