#pragma once

#include <cstdio>
#include <cstdint>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "gpro/common.hpp"
#include "gpro/generator.hpp"

namespace gpro {

// Every hyperparameter and toggle of a run. Flat `key = value` text format,
// '#' comments; precedence is command line > config file > built-in default.
struct TrainConfig {
  // generator
  int num_classes = 4;
  double bias_degree = 0.9;
  int bg_min = 8;
  int bg_max = 16;
  double bg_edge_prob = 0.3;
  int attach_edges = 2;
  double feature_noise_std = 0.05;
  int train_size = 800;
  int val_size = 200;
  int test_size = 400;
  // model
  int num_blocks = 2;
  double rho_causal = 0.9;
  double rho_noncausal = 0.8;
  std::string rho_causal_list;     // optional per-block overrides, comma separated
  std::string rho_noncausal_list;
  int hidden_dim = 32;
  bool soft_mask = false;
  bool normalize_degree = false;
  // loss
  double gce_q = 0.7;
  double tau = 0.07;
  double lambda1 = 15.0;
  double lambda2 = 0.01;
  double lambda3 = 1.0;
  // training
  double lr = 0.01;
  int batch_size = 32;
  int epochs = 60;
  int cou_start_epoch = -1;  // -1: epochs/2
  uint64_t seed = 1;
  bool use_per = true;
  bool use_smv = true;
  bool use_cou = true;
  bool use_scl = true;
  bool use_con = true;
  int ablate_num_seeds = 3;
  // io
  std::string data_dir = ".";
  std::string out_dir = ".";
  std::string checkpoint_path;  // empty: <out_dir>/model.best.ckpt
  std::string eval_split = "test";

  int resolved_cou_start() const { return cou_start_epoch < 0 ? epochs / 2 : cou_start_epoch; }

  std::vector<double> rho_blocks(bool causal) const {
    const std::string& list = causal ? rho_causal_list : rho_noncausal_list;
    const double uniform = causal ? rho_causal : rho_noncausal;
    if (list.empty()) return std::vector<double>(num_blocks, uniform);
    std::vector<double> rhos;
    std::stringstream ss(list);
    std::string tok;
    while (std::getline(ss, tok, ',')) rhos.push_back(std::stod(tok));
    if (int(rhos.size()) != num_blocks)
      throw ConfigError("rho list needs exactly " + std::to_string(num_blocks) + " entries");
    return rhos;
  }

  BiasSpec bias_spec() const {
    BiasSpec s;
    s.num_classes = num_classes;
    s.bias_degree = bias_degree;
    s.bg_min = bg_min;
    s.bg_max = bg_max;
    s.bg_edge_prob = bg_edge_prob;
    s.attach_edges = attach_edges;
    s.feature_noise_std = feature_noise_std;
    s.train_size = train_size;
    s.val_size = val_size;
    s.test_size = test_size;
    s.seed = seed;
    return s;
  }

  void validate() const {
    bias_spec().validate();
    if (num_blocks < 1) throw ConfigError("num_blocks must be >= 1");
    if (hidden_dim < 1) throw ConfigError("hidden_dim must be >= 1");
    if (gce_q <= 0.0 || gce_q > 1.0) throw ConfigError("gce_q must be in (0,1]");
    if (tau <= 0.0) throw ConfigError("tau must be > 0");
    if (lambda1 < 0.0 || lambda2 < 0.0 || lambda3 < 0.0)
      throw ConfigError("lambdas must be non-negative");
    if (lr <= 0.0) throw ConfigError("lr must be > 0");
    if (batch_size < 1) throw ConfigError("batch_size must be >= 1");
    if ((use_per || use_scl) && batch_size < 2)
      throw ConfigError("batch_size must be >= 2 when use_per or use_scl is set");
    if (epochs < 1) throw ConfigError("epochs must be >= 1");
    if (resolved_cou_start() > epochs) throw ConfigError("cou_start_epoch must be <= epochs");
    rho_blocks(true);
    rho_blocks(false);
    for (double r : rho_blocks(true))
      if (r <= 0.0 || r > 1.0) throw ConfigError("rho_causal must be in (0,1]");
    for (double r : rho_blocks(false))
      if (r <= 0.0 || r > 1.0) throw ConfigError("rho_noncausal must be in (0,1]");
    if (eval_split != "train" && eval_split != "val" && eval_split != "test")
      throw ConfigError("eval_split must be train, val or test");
    if (ablate_num_seeds < 1) throw ConfigError("ablate_num_seeds must be >= 1");
  }
};

namespace detail {

inline std::string fmt_double(double v) {
  char buf[48];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

struct ConfigField {
  std::string key;
  std::function<std::string(const TrainConfig&)> get;
  std::function<void(TrainConfig&, const std::string&)> set;
};

inline bool parse_bool(const std::string& s, const std::string& key) {
  if (s == "true" || s == "1") return true;
  if (s == "false" || s == "0") return false;
  throw ConfigError("bad boolean for key '" + key + "': " + s);
}

inline const std::vector<ConfigField>& config_fields() {
  static const std::vector<ConfigField> fields = [] {
    std::vector<ConfigField> f;
    auto add_int = [&](const std::string& k, int TrainConfig::* m) {
      f.push_back({k, [m](const TrainConfig& c) { return std::to_string(c.*m); },
                   [m, k](TrainConfig& c, const std::string& v) {
                     try { c.*m = std::stoi(v); }
                     catch (...) { throw ConfigError("bad integer for key '" + k + "': " + v); }
                   }});
    };
    auto add_dbl = [&](const std::string& k, double TrainConfig::* m) {
      f.push_back({k, [m](const TrainConfig& c) { return fmt_double(c.*m); },
                   [m, k](TrainConfig& c, const std::string& v) {
                     try { c.*m = std::stod(v); }
                     catch (...) { throw ConfigError("bad number for key '" + k + "': " + v); }
                   }});
    };
    auto add_bool = [&](const std::string& k, bool TrainConfig::* m) {
      f.push_back({k, [m](const TrainConfig& c) { return (c.*m) ? "true" : "false"; },
                   [m, k](TrainConfig& c, const std::string& v) { c.*m = parse_bool(v, k); }});
    };
    auto add_str = [&](const std::string& k, std::string TrainConfig::* m) {
      f.push_back({k, [m](const TrainConfig& c) { return c.*m; },
                   [m](TrainConfig& c, const std::string& v) { c.*m = v; }});
    };
    add_int("num_classes", &TrainConfig::num_classes);
    add_dbl("bias_degree", &TrainConfig::bias_degree);
    add_int("bg_min", &TrainConfig::bg_min);
    add_int("bg_max", &TrainConfig::bg_max);
    add_dbl("bg_edge_prob", &TrainConfig::bg_edge_prob);
    add_int("attach_edges", &TrainConfig::attach_edges);
    add_dbl("feature_noise_std", &TrainConfig::feature_noise_std);
    add_int("train_size", &TrainConfig::train_size);
    add_int("val_size", &TrainConfig::val_size);
    add_int("test_size", &TrainConfig::test_size);
    add_int("num_blocks", &TrainConfig::num_blocks);
    add_dbl("rho_causal", &TrainConfig::rho_causal);
    add_dbl("rho_noncausal", &TrainConfig::rho_noncausal);
    add_str("rho_causal_list", &TrainConfig::rho_causal_list);
    add_str("rho_noncausal_list", &TrainConfig::rho_noncausal_list);
    add_int("hidden_dim", &TrainConfig::hidden_dim);
    add_bool("soft_mask", &TrainConfig::soft_mask);
    add_bool("normalize_degree", &TrainConfig::normalize_degree);
    add_dbl("gce_q", &TrainConfig::gce_q);
    add_dbl("tau", &TrainConfig::tau);
    add_dbl("lambda1", &TrainConfig::lambda1);
    add_dbl("lambda2", &TrainConfig::lambda2);
    add_dbl("lambda3", &TrainConfig::lambda3);
    add_dbl("lr", &TrainConfig::lr);
    add_int("batch_size", &TrainConfig::batch_size);
    add_int("epochs", &TrainConfig::epochs);
    add_int("cou_start_epoch", &TrainConfig::cou_start_epoch);
    f.push_back({"seed",
                 [](const TrainConfig& c) { return std::to_string(c.seed); },
                 [](TrainConfig& c, const std::string& v) {
                   try { c.seed = std::stoull(v); }
                   catch (...) { throw ConfigError("bad integer for key 'seed': " + v); }
                 }});
    add_bool("use_per", &TrainConfig::use_per);
    add_bool("use_smv", &TrainConfig::use_smv);
    add_bool("use_cou", &TrainConfig::use_cou);
    add_bool("use_scl", &TrainConfig::use_scl);
    add_bool("use_con", &TrainConfig::use_con);
    add_int("ablate_num_seeds", &TrainConfig::ablate_num_seeds);
    add_str("data_dir", &TrainConfig::data_dir);
    add_str("out_dir", &TrainConfig::out_dir);
    add_str("checkpoint_path", &TrainConfig::checkpoint_path);
    add_str("eval_split", &TrainConfig::eval_split);
    return f;
  }();
  return fields;
}

inline std::string trim(const std::string& s) {
  size_t b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  size_t e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

}  // namespace detail

inline void set_config_key(TrainConfig& cfg, const std::string& key, const std::string& value) {
  for (const auto& f : detail::config_fields()) {
    if (f.key == key) {
      f.set(cfg, value);
      return;
    }
  }
  throw ConfigError("unknown config key '" + key + "'");
}

inline void apply_config_text(TrainConfig& cfg, std::istream& in, const std::string& source) {
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    std::string t = detail::trim(line);
    if (t.empty() || t[0] == '#') continue;
    size_t eq = t.find('=');
    if (eq == std::string::npos)
      throw ConfigError(source + ": line " + std::to_string(lineno) + ": expected 'key = value'");
    set_config_key(cfg, detail::trim(t.substr(0, eq)), detail::trim(t.substr(eq + 1)));
  }
}

inline TrainConfig load_config(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw ConfigError("cannot open config: " + path);
  TrainConfig cfg;
  apply_config_text(cfg, f, path);
  return cfg;
}

// Canonical serialization: every key, fixed order, replayable byte-for-byte.
inline std::string config_to_string(const TrainConfig& cfg) {
  std::string out;
  for (const auto& f : detail::config_fields()) out += f.key + " = " + f.get(cfg) + "\n";
  return out;
}

inline void save_config(const TrainConfig& cfg, const std::string& path) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot write config: " + path);
  f << config_to_string(cfg);
}

}  // namespace gpro
