#pragma once

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include "gpro/config.hpp"
#include "gpro/dataset_io.hpp"
#include "gpro/generator.hpp"
#include "gpro/trainer.hpp"

namespace gpro {

namespace cli {

inline const char* kUsage =
    "usage: gpro <gen-data|train|eval|ablate|export-emb> --config <file> [--<key> <value>...]\n"
    "\n"
    "Any config key can be overridden on the command line (e.g. --seed 7).\n"
    "Aliases: --out = --out_dir, --data = --data_dir.\n"
    "Outputs land in out_dir with fixed names: data.{train,val,test}.txt,\n"
    "gen.stats.txt, train.metrics.csv, model.best.ckpt, emb.csv,\n"
    "ablate.summary.csv, resolved.cfg.\n";

struct SplitFiles {
  std::string train, val, test;
};

inline SplitFiles split_files(const std::string& dir) {
  return {dir + "/data.train.txt", dir + "/data.val.txt", dir + "/data.test.txt"};
}

inline std::string default_checkpoint(const TrainConfig& cfg) {
  return cfg.checkpoint_path.empty() ? cfg.out_dir + "/model.best.ckpt" : cfg.checkpoint_path;
}

inline void write_resolved(const TrainConfig& cfg) {
  save_config(cfg, cfg.out_dir + "/resolved.cfg");
}

inline LoadedDataset load_split_checked(const std::string& path, const TrainConfig& cfg) {
  LoadedDataset ds = load_dataset(path);
  if (ds.num_classes != cfg.num_classes)
    throw ConfigError(path + ": dataset has " + std::to_string(ds.num_classes) +
                      " classes, config says " + std::to_string(cfg.num_classes));
  return ds;
}

inline int run_gen_data(const TrainConfig& cfg) {
  DatasetSplits splits = generate_dataset(cfg.bias_spec());
  SplitFiles files = split_files(cfg.out_dir);
  const int F = cfg.bias_spec().feature_dim();
  save_dataset(files.train, splits.train, cfg.num_classes, F);
  save_dataset(files.val, splits.val, cfg.num_classes, F);
  save_dataset(files.test, splits.test, cfg.num_classes, F);

  auto stats = [&](const std::vector<Graph>& gs) {
    double nodes = 0, edges = 0;
    for (const Graph& g : gs) {
      nodes += g.n;
      edges += double(g.edges.size());
    }
    char buf[160];
    std::snprintf(buf, sizeof buf,
                  "graphs %zu  color_label_agreement %.4f  avg_nodes %.2f  avg_edges %.2f\n",
                  gs.size(), color_label_agreement(gs), nodes / gs.size(), edges / gs.size());
    return std::string(buf);
  };
  std::ofstream f(cfg.out_dir + "/gen.stats.txt", std::ios::binary);
  f << "train: " << stats(splits.train) << "val:   " << stats(splits.val)
    << "test:  " << stats(splits.test);
  write_resolved(cfg);
  std::cout << "wrote " << files.train << ", " << files.val << ", " << files.test << "\n";
  return 0;
}

inline int run_train(const TrainConfig& cfg) {
  SplitFiles files = split_files(cfg.data_dir);
  LoadedDataset train = load_split_checked(files.train, cfg);
  LoadedDataset val = load_split_checked(files.val, cfg);
  GproModel model(cfg, train.feat_dim);
  TrainResult res = train_gpro(model, cfg, train.graphs, val.graphs);
  write_metrics_csv(cfg.out_dir + "/train.metrics.csv", res.history);
  model.store().save_snapshot(cfg.out_dir + "/model.best.ckpt", res.best_params);
  write_resolved(cfg);
  std::printf("best val accuracy %.4f at epoch %d\n", res.best_val_accuracy, res.best_epoch);
  return 0;
}

inline int run_eval(const TrainConfig& cfg) {
  SplitFiles files = split_files(cfg.data_dir);
  const std::string path = cfg.eval_split == "train" ? files.train
                           : cfg.eval_split == "val" ? files.val
                                                     : files.test;
  LoadedDataset ds = load_split_checked(path, cfg);
  GproModel model(cfg, ds.feat_dim);
  model.store().load(default_checkpoint(cfg));
  EvalResult r = evaluate_gpro(model, ds.graphs, cfg);
  std::printf("split %s  accuracy %.4f\n", cfg.eval_split.c_str(), r.accuracy);
  for (int c = 0; c < cfg.num_classes; ++c) {
    if (r.per_class_total[c] == 0)
      std::printf("class %d: absent\n", c);
    else
      std::printf("class %d: %.4f (%d/%d)\n", c,
                  double(r.per_class_correct[c]) / r.per_class_total[c],
                  r.per_class_correct[c], r.per_class_total[c]);
  }
  write_resolved(cfg);
  return 0;
}

inline int run_export_emb(const TrainConfig& cfg) {
  SplitFiles files = split_files(cfg.data_dir);
  const std::string path = cfg.eval_split == "train" ? files.train
                           : cfg.eval_split == "val" ? files.val
                                                     : files.test;
  LoadedDataset ds = load_split_checked(path, cfg);
  GproModel model(cfg, ds.feat_dim);
  model.store().load(default_checkpoint(cfg));
  export_embeddings(model, ds.graphs, cfg, cfg.out_dir + "/emb.csv");
  write_resolved(cfg);
  std::cout << "wrote " << cfg.out_dir << "/emb.csv\n";
  return 0;
}

// The five Table-style variants plus the full model, each trained over
// ablate_num_seeds consecutive seeds; per-run outputs live in subdirectories.
inline int run_ablate(const TrainConfig& cfg) {
  SplitFiles files = split_files(cfg.data_dir);
  LoadedDataset train = load_split_checked(files.train, cfg);
  LoadedDataset val = load_split_checked(files.val, cfg);
  LoadedDataset test = load_split_checked(files.test, cfg);
  std::vector<AblationRow> rows;
  for (const std::string& name : ablation_variants()) {
    AblationRow row;
    row.variant = name;
    for (int s = 0; s < cfg.ablate_num_seeds; ++s) {
      TrainConfig vc = ablation_variant(cfg, name);
      vc.seed = cfg.seed + uint64_t(s);
      vc.out_dir = cfg.out_dir + "/ablate_" + name + "_seed" + std::to_string(s);
      std::filesystem::create_directories(vc.out_dir);
      GproModel model(vc, train.feat_dim);
      TrainResult res = train_gpro(model, vc, train.graphs, val.graphs);
      write_metrics_csv(vc.out_dir + "/train.metrics.csv", res.history);
      model.store().save_snapshot(vc.out_dir + "/model.best.ckpt", res.best_params);
      write_resolved(vc);
      const double acc = evaluate_gpro(model, test.graphs, vc).accuracy;
      row.accuracies.push_back(acc);
      std::printf("%-8s seed %llu: test accuracy %.4f\n", name.c_str(),
                  (unsigned long long)vc.seed, acc);
    }
    rows.push_back(std::move(row));
  }
  write_ablation_csv(cfg.out_dir + "/ablate.summary.csv", rows);
  write_resolved(cfg);
  for (const AblationRow& r : rows)
    std::printf("%-8s mean %.4f stderr %.4f\n", r.variant.c_str(), r.mean(), r.stderr_());
  return 0;
}

}  // namespace cli

inline int cli_main(int argc, const char* const* argv) {
  using namespace cli;
  if (argc < 2) {
    std::cerr << kUsage;
    return 2;
  }
  const std::string command = argv[1];
  if (command == "--help" || command == "-h" || command == "help") {
    std::cout << kUsage;
    return 0;
  }
  const bool known = command == "gen-data" || command == "train" || command == "eval" ||
                     command == "ablate" || command == "export-emb";
  if (!known) {
    std::cerr << "unknown command '" << command << "'\n" << kUsage;
    return 2;
  }
  try {
    std::string config_path;
    std::vector<std::pair<std::string, std::string>> overrides;
    for (int i = 2; i < argc; ++i) {
      std::string flag = argv[i];
      if (flag.rfind("--", 0) != 0)
        throw ConfigError("expected a --flag, got '" + flag + "'");
      flag = flag.substr(2);
      if (i + 1 >= argc) throw ConfigError("flag --" + flag + " needs a value");
      std::string value = argv[++i];
      if (flag == "config") config_path = value;
      else if (flag == "out") overrides.emplace_back("out_dir", value);
      else if (flag == "data") overrides.emplace_back("data_dir", value);
      else overrides.emplace_back(flag, value);
    }
    if (config_path.empty()) {
      std::cerr << "missing --config\n" << kUsage;
      return 2;
    }
    TrainConfig cfg = load_config(config_path);
    for (const auto& [k, v] : overrides) set_config_key(cfg, k, v);
    cfg.validate();
    std::filesystem::create_directories(cfg.out_dir);

    if (command == "gen-data") return run_gen_data(cfg);
    if (command == "train") return run_train(cfg);
    if (command == "eval") return run_eval(cfg);
    if (command == "export-emb") return run_export_emb(cfg);
    return run_ablate(cfg);
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}

}  // namespace gpro
