#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <random>
#include <string>
#include <vector>

#include "gpro/counterfactual.hpp"
#include "gpro/dataset_io.hpp"
#include "gpro/model.hpp"
#include "gpro/optim.hpp"

namespace gpro {

constexpr uint64_t kTrainSeedSalt = 0xD1B54A32D192ED03ull;

struct EpochMetrics {
  int epoch = 0;
  std::string split;
  LossBreakdown loss;
  double accuracy = 0.0;
};

struct EvalResult {
  double accuracy = 0.0;
  std::vector<int> per_class_total;    // zero total marks an absent class
  std::vector<int> per_class_correct;
  LossBreakdown breakdown;             // cou is always 0 in eval mode
};

struct TrainResult {
  std::vector<EpochMetrics> history;
  double best_val_accuracy = -1.0;
  int best_epoch = -1;
  std::vector<Matrix> best_params;  // snapshot of the model store at the best epoch
};

namespace detail {

inline void check_finite(const LossBreakdown& b, int epoch) {
  auto bad = [&](double v, const char* term) {
    if (!std::isfinite(v))
      throw TrainError("non-finite loss term '" + std::string(term) + "' at epoch " +
                       std::to_string(epoch));
  };
  bad(b.dis, "dis");
  bad(b.cou, "cou");
  bad(b.scl, "scl");
  bad(b.con, "con");
  bad(b.total, "total");
}

inline int argmax_row(const Matrix& m, int i) {
  int best = 0;
  for (int j = 1; j < m.cols; ++j)
    if (m(i, j) > m(i, best)) best = j;
  return best;
}

struct BatchOutcome {
  Value total;
  LossBreakdown breakdown;
  std::vector<int> predictions;  // argmax of the causal head
  int correct = 0;
};

// One forward pass and loss assembly, shared by the train step (training
// mode, counterfactuals drawn from rng) and the eval path (frozen batch
// norm, no counterfactuals).
inline BatchOutcome gpro_batch_losses(GproModel& model, const GraphBatch& batch,
                                      const TrainConfig& cfg, bool training,
                                      bool cou_active, std::mt19937_64* rng) {
  BatchOutcome out;
  GproModel::Forward f = model.forward(batch, training);
  DisResult dis = dis_loss(model.classifiers(), f.tc.Z, f.tn.Z, batch.labels, cfg.gce_q);
  Value cou, scl, con;
  if (cou_active && training) {
    CounterfactualBundle cf = make_counterfactuals(f.tn.Z, batch.labels, *rng);
    Matrix w = sample_weights(dis.ce_rows_c.data(), dis.ce_rows_n.data());
    cou = cou_loss(model.classifiers(), f.tc.Z, cf.z_per, cf.z_smv, batch.labels,
                   cf.permuted_labels, w, cfg.gce_q, cfg.use_per, cfg.use_smv);
    out.breakdown.weights.assign(w.a.begin(), w.a.end());
  }
  if (cfg.use_scl) scl = scl_loss(f.tc.Z, f.tn.Z, batch.labels, cfg.tau);
  if (cfg.use_con) con = con_loss(f.tc, f.tn);
  TotalLoss t = total_loss(dis.loss, cou, scl, con, cfg.lambda1, cfg.lambda2, cfg.lambda3,
                           cou_active && training);
  t.breakdown.weights = out.breakdown.weights;
  out.total = t.value;
  out.breakdown = t.breakdown;
  for (int i = 0; i < batch.num_graphs; ++i) {
    out.predictions.push_back(argmax_row(dis.logits_c.data(), i));
    out.correct += (out.predictions.back() == batch.labels[i]);
  }
  return out;
}

inline std::vector<std::vector<int>> batch_indices(int n, int batch_size) {
  std::vector<std::vector<int>> out;
  for (int b = 0; b < n; b += batch_size) {
    std::vector<int> idx;
    for (int i = b; i < std::min(b + batch_size, n); ++i) idx.push_back(i);
    out.push_back(std::move(idx));
  }
  return out;
}

}  // namespace detail

inline EvalResult evaluate_gpro(GproModel& model, const std::vector<Graph>& graphs,
                                const TrainConfig& cfg) {
  EvalResult r;
  r.per_class_total.assign(cfg.num_classes, 0);
  r.per_class_correct.assign(cfg.num_classes, 0);
  int correct = 0;
  double wsum = 0.0;
  for (const auto& idx : detail::batch_indices(int(graphs.size()), cfg.batch_size)) {
    GraphBatch b = make_batch(graphs, idx);
    detail::BatchOutcome o =
        detail::gpro_batch_losses(model, b, cfg, /*training=*/false, /*cou=*/false, nullptr);
    const double w = double(b.num_graphs);
    r.breakdown.dis += o.breakdown.dis * w;
    r.breakdown.scl += o.breakdown.scl * w;
    r.breakdown.con += o.breakdown.con * w;
    r.breakdown.total += o.breakdown.total * w;
    wsum += w;
    correct += o.correct;
    for (int i = 0; i < b.num_graphs; ++i) {
      ++r.per_class_total[b.labels[i]];
      r.per_class_correct[b.labels[i]] += (o.predictions[i] == b.labels[i]);
    }
  }
  r.breakdown.dis /= wsum;
  r.breakdown.scl /= wsum;
  r.breakdown.con /= wsum;
  r.breakdown.total /= wsum;
  r.accuracy = double(correct) / double(graphs.size());
  return r;
}

inline TrainResult train_gpro(GproModel& model, const TrainConfig& cfg,
                              const std::vector<Graph>& train_set,
                              const std::vector<Graph>& val_set) {
  cfg.validate();
  TrainResult result;
  Adam opt(cfg.lr);
  std::mt19937_64 rng(cfg.seed ^ kTrainSeedSalt);
  std::vector<int> order(train_set.size());
  std::iota(order.begin(), order.end(), 0);
  const int cou_start = cfg.resolved_cou_start();

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    const bool cou_active = cfg.use_cou && epoch >= cou_start;
    LossBreakdown agg;
    int correct = 0;
    double wsum = 0.0;
    for (size_t b = 0; b < order.size(); b += cfg.batch_size) {
      std::vector<int> idx(order.begin() + b,
                           order.begin() + std::min(b + cfg.batch_size, order.size()));
      GraphBatch batch = make_batch(train_set, idx);
      detail::BatchOutcome o =
          detail::gpro_batch_losses(model, batch, cfg, true, cou_active, &rng);
      detail::check_finite(o.breakdown, epoch);
      o.total.backward();
      opt.step(model.store());
      const double w = double(batch.num_graphs);
      agg.dis += o.breakdown.dis * w;
      agg.cou += o.breakdown.cou * w;
      agg.scl += o.breakdown.scl * w;
      agg.con += o.breakdown.con * w;
      agg.total += o.breakdown.total * w;
      correct += o.correct;
      wsum += w;
    }
    agg.dis /= wsum;
    agg.cou /= wsum;
    agg.scl /= wsum;
    agg.con /= wsum;
    agg.total /= wsum;
    result.history.push_back({epoch, "train", agg, double(correct) / wsum});

    EvalResult val = evaluate_gpro(model, val_set, cfg);
    result.history.push_back({epoch, "val", val.breakdown, val.accuracy});
    if (val.accuracy > result.best_val_accuracy) {  // ties keep the earliest epoch
      result.best_val_accuracy = val.accuracy;
      result.best_epoch = epoch;
      result.best_params = model.store().snapshot();
    }
  }
  model.store().restore(result.best_params);
  return result;
}

// ---------------------------------------------------------------------------
// baseline GCN
// ---------------------------------------------------------------------------

inline double evaluate_baseline(BaselineGcn& model, const std::vector<Graph>& graphs,
                                const TrainConfig& cfg) {
  int correct = 0;
  for (const auto& idx : detail::batch_indices(int(graphs.size()), cfg.batch_size)) {
    GraphBatch b = make_batch(graphs, idx);
    std::vector<int> pred = model.predict(b);
    for (int i = 0; i < b.num_graphs; ++i) correct += (pred[i] == b.labels[i]);
  }
  return double(correct) / double(graphs.size());
}

inline TrainResult train_baseline(BaselineGcn& model, const TrainConfig& cfg,
                                  const std::vector<Graph>& train_set,
                                  const std::vector<Graph>& val_set) {
  TrainResult result;
  Adam opt(cfg.lr);
  std::mt19937_64 rng(cfg.seed ^ kTrainSeedSalt);
  std::vector<int> order(train_set.size());
  std::iota(order.begin(), order.end(), 0);
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    double loss_sum = 0.0, wsum = 0.0;
    int correct = 0;
    for (size_t b = 0; b < order.size(); b += cfg.batch_size) {
      std::vector<int> idx(order.begin() + b,
                           order.begin() + std::min(b + cfg.batch_size, order.size()));
      GraphBatch batch = make_batch(train_set, idx);
      Value logits = model.forward(batch, true);
      CeResult ce = softmax_cross_entropy(logits, batch.labels);
      if (!std::isfinite(ce.loss.item()))
        throw TrainError("non-finite loss term 'dis' at epoch " + std::to_string(epoch));
      ce.loss.backward();
      opt.step(model.store());
      loss_sum += ce.loss.item() * batch.num_graphs;
      wsum += batch.num_graphs;
      for (int i = 0; i < batch.num_graphs; ++i)
        correct += (detail::argmax_row(logits.data(), i) == batch.labels[i]);
    }
    LossBreakdown bd;
    bd.dis = bd.total = loss_sum / wsum;
    result.history.push_back({epoch, "train", bd, double(correct) / wsum});
    const double val_acc = evaluate_baseline(model, val_set, cfg);
    LossBreakdown vb;
    result.history.push_back({epoch, "val", vb, val_acc});
    if (val_acc > result.best_val_accuracy) {
      result.best_val_accuracy = val_acc;
      result.best_epoch = epoch;
      result.best_params = model.store().snapshot();
    }
  }
  model.store().restore(result.best_params);
  return result;
}

// ---------------------------------------------------------------------------
// persistence
// ---------------------------------------------------------------------------

inline void write_metrics_csv(const std::string& path, const std::vector<EpochMetrics>& rows) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot write metrics: " + path);
  f << "epoch,split,loss_dis,loss_cou,loss_scl,loss_con,loss_total,accuracy\n";
  char buf[160];
  for (const EpochMetrics& m : rows) {
    std::snprintf(buf, sizeof buf, "%d,%s,%.6f,%.6f,%.6f,%.6f,%.6f,%.6f\n", m.epoch,
                  m.split.c_str(), m.loss.dis, m.loss.cou, m.loss.scl, m.loss.con,
                  m.loss.total, m.accuracy);
    f << buf;
  }
}

// graph_id,label,z_c_*,z_n_* for every graph of a split, eval mode.
inline void export_embeddings(GproModel& model, const std::vector<Graph>& graphs,
                              const TrainConfig& cfg, const std::string& path) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot write embeddings: " + path);
  const int d = cfg.hidden_dim;
  f << "graph_id,label";
  for (int j = 0; j < d; ++j) f << ",z_c_" << j;
  for (int j = 0; j < d; ++j) f << ",z_n_" << j;
  f << "\n";
  char buf[48];
  int gid = 0;
  for (const auto& idx : detail::batch_indices(int(graphs.size()), cfg.batch_size)) {
    GraphBatch b = make_batch(graphs, idx);
    GproModel::Forward fw = model.forward(b, /*training=*/false);
    for (int i = 0; i < b.num_graphs; ++i, ++gid) {
      f << gid << "," << b.labels[i];
      for (int j = 0; j < d; ++j) {
        std::snprintf(buf, sizeof buf, "%.9g", fw.tc.Z.data()(i, j));
        f << "," << buf;
      }
      for (int j = 0; j < d; ++j) {
        std::snprintf(buf, sizeof buf, "%.9g", fw.tn.Z.data()(i, j));
        f << "," << buf;
      }
      f << "\n";
    }
  }
}

// ---------------------------------------------------------------------------
// ablation sweep
// ---------------------------------------------------------------------------

struct AblationRow {
  std::string variant;
  std::vector<double> accuracies;  // one per seed

  double mean() const {
    return std::accumulate(accuracies.begin(), accuracies.end(), 0.0) / accuracies.size();
  }
  double stderr_() const {
    if (accuracies.size() < 2) return 0.0;
    const double m = mean();
    double ss = 0.0;
    for (double a : accuracies) ss += (a - m) * (a - m);
    return std::sqrt(ss / double(accuracies.size() - 1)) / std::sqrt(double(accuracies.size()));
  }
};

inline TrainConfig ablation_variant(const TrainConfig& base, const std::string& name) {
  TrainConfig c = base;
  if (name == "full") return c;
  if (name == "wo_Zper") c.use_per = false;
  else if (name == "wo_Zsmv") c.use_smv = false;
  else if (name == "wo_Lcou") c.use_cou = false;
  else if (name == "wo_Lscl") c.use_scl = false;
  else if (name == "wo_Lcon") c.use_con = false;
  else throw ConfigError("unknown ablation variant '" + name + "'");
  return c;
}

inline const std::vector<std::string>& ablation_variants() {
  static const std::vector<std::string> v = {"full",    "wo_Zper", "wo_Zsmv",
                                             "wo_Lcou", "wo_Lscl", "wo_Lcon"};
  return v;
}

inline void write_ablation_csv(const std::string& path, const std::vector<AblationRow>& rows) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot write ablation summary: " + path);
  const size_t seeds = rows.empty() ? 0 : rows[0].accuracies.size();
  f << "variant,num_seeds,mean_accuracy,stderr";
  for (size_t s = 0; s < seeds; ++s) f << ",acc_seed" << s;
  f << "\n";
  char buf[48];
  for (const AblationRow& r : rows) {
    f << r.variant << "," << r.accuracies.size();
    std::snprintf(buf, sizeof buf, ",%.6f", r.mean());
    f << buf;
    std::snprintf(buf, sizeof buf, ",%.6f", r.stderr_());
    f << buf;
    for (double a : r.accuracies) {
      std::snprintf(buf, sizeof buf, ",%.6f", a);
      f << buf;
    }
    f << "\n";
  }
}

}  // namespace gpro
