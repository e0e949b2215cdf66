#pragma once

#include <map>
#include <random>
#include <string>
#include <vector>

#include "gpro/checkpoint.hpp"
#include "gpro/ops.hpp"
#include "gpro/tower.hpp"

namespace gpro {

// The five objective terms plus the per-sample counterfactual weights.
// total = dis + lambda1*cou + lambda2*scl + lambda3*con; inactive terms
// contribute exactly zero.
struct LossBreakdown {
  double dis = 0.0, cou = 0.0, scl = 0.0, con = 0.0, total = 0.0;
  std::vector<double> weights;
};

// Linear heads over the concatenated representation [Z_c ; Z_n].
struct Classifiers {
  Value cW, cb, nW, nb;

  static Classifiers create(ParamStore& store, int d2, int num_classes,
                            std::mt19937_64& rng) {
    Classifiers c;
    c.cW = store.add("clf_c.W", xavier_uniform(d2, num_classes, rng));
    c.cb = store.add("clf_c.b", Matrix(1, num_classes));
    c.nW = store.add("clf_n.W", xavier_uniform(d2, num_classes, rng));
    c.nb = store.add("clf_n.b", Matrix(1, num_classes));
    return c;
  }

  Value causal_logits(const Value& z) const { return add(matmul(z, cW), cb); }
  Value noncausal_logits(const Value& z) const { return add(matmul(z, nW), nb); }
};

struct DisResult {
  Value loss;        // CE(phi_c) + GCE(phi_n), batch means
  Value logits_c;    // for accuracy
  Value ce_rows_c;   // per-sample CE of the causal head
  Value ce_rows_n;   // per-sample plain CE of the non-causal head (for W)
};

// Discrimination loss. Each head sees the concatenation with the other
// tower's half detached, so neither loss trains the opposite encoder.
inline DisResult dis_loss(const Classifiers& clf, const Value& z_c, const Value& z_n,
                          const std::vector<int>& labels, double q) {
  DisResult r;
  Value for_c = concat_cols(z_c, z_n.detach());
  Value for_n = concat_cols(z_c.detach(), z_n);
  r.logits_c = clf.causal_logits(for_c);
  Value logits_n = clf.noncausal_logits(for_n);
  r.ce_rows_c = cross_entropy_rows(r.logits_c, labels);
  r.ce_rows_n = cross_entropy_rows(logits_n, labels);
  r.loss = add(mean(r.ce_rows_c), mean(gce_rows(logits_n, labels, q)));
  return r;
}

// W[i] = ce_n[i] / (ce_c[i] + ce_n[i] + eps), detached: samples the biased
// head finds hard but the causal head does not are treated as unbiased and
// upweighted in the counterfactual loss.
inline Matrix sample_weights(const Matrix& ce_c, const Matrix& ce_n) {
  Matrix w(ce_c.rows, 1);
  for (int i = 0; i < ce_c.rows; ++i)
    w(i, 0) = ce_n(i, 0) / (ce_c(i, 0) + ce_n(i, 0) + 1e-8);
  return w;
}

// Counterfactual loss over the active augmentation strategies. The causal
// half is W-weighted per sample before the batch mean and keeps the original
// labels; the non-causal half targets the permuted labels with GCE.
inline Value cou_loss(const Classifiers& clf, const Value& z_c, const Value& z_per,
                      const Value& z_smv, const std::vector<int>& labels,
                      const std::vector<int>& permuted_labels, const Matrix& w, double q,
                      bool use_per, bool use_smv) {
  if (!use_per && !use_smv) return Value::scalar(0.0);
  const double inv = 1.0 / double(int(use_per) + int(use_smv));
  Value ce_sum, gce_sum;
  auto accumulate = [&](const Value& z_nc) {
    Value lc = clf.causal_logits(concat_cols(z_c, z_nc.detach()));
    Value ln = clf.noncausal_logits(concat_cols(z_c.detach(), z_nc));
    Value ce = cross_entropy_rows(lc, labels);
    Value gce = gce_rows(ln, permuted_labels, q);
    ce_sum = ce_sum.defined() ? add(ce_sum, ce) : ce;
    gce_sum = gce_sum.defined() ? add(gce_sum, gce) : gce;
  };
  if (use_per) accumulate(z_per);
  if (use_smv) accumulate(z_smv);
  Value causal_half = mean(mul(Value::constant(w), mul(ce_sum, inv)));
  Value noncausal_half = mean(mul(gce_sum, inv));
  return add(causal_half, noncausal_half);
}

// Supervised contrastive loss with non-causal negatives. Embeddings are
// L2-normalized before the dot products; the log-of-sum-over-positives form
// is used, and the non-causal sum ranges over the full batch including the
// anchor itself. Samples without positives are skipped.
inline Value scl_loss(const Value& z_c, const Value& z_n, const std::vector<int>& labels,
                      double tau) {
  if (tau <= 0.0) throw ConfigError("scl_loss: tau must be > 0");
  const int n = z_c.rows();
  if (n < 2) {
    record_warning("scl_loss: batch of " + std::to_string(n) + ", returning 0");
    return Value::scalar(0.0);
  }
  Value zc = div(z_c, sqrt(row_sum(mul(z_c, z_c))));
  Value zn = div(z_n, sqrt(row_sum(mul(z_n, z_n))));
  Value sim_cc = exp(mul(matmul(zc, transpose(zc)), 1.0 / tau));
  Value sim_cn = exp(mul(matmul(zc, transpose(zn)), 1.0 / tau));

  Matrix pos(n, n), others(n, n, 1.0);
  Matrix coef(n, 1);
  for (int i = 0; i < n; ++i) {
    others(i, i) = 0.0;
    int cnt = 0;
    for (int j = 0; j < n; ++j)
      if (j != i && labels[j] == labels[i]) {
        pos(i, j) = 1.0;
        ++cnt;
      }
    coef(i, 0) = cnt > 0 ? 1.0 / double(cnt) : 0.0;
  }
  Value num = row_sum(mul(sim_cc, Value::constant(pos)));
  Value den = add(row_sum(mul(sim_cc, Value::constant(others))), row_sum(sim_cn));
  // -log(num/den) per anchor; anchors with no positives carry zero weight,
  // which also kills the log(0) gradient path through their numerator.
  Value per = sub(log(den), log(num));
  return sum(mul(Value::constant(coef), per));
}

// Consistency between the towers' attention scores, averaged over blocks and
// restricted per block to edges present in both towers' current adjacencies.
inline Value con_loss(const TowerState& tc, const TowerState& tn) {
  if (tc.blocks.size() != tn.blocks.size())
    throw std::invalid_argument("con_loss: towers ran different block counts");
  const int L = int(tc.blocks.size());
  Value total = Value::scalar(0.0);
  for (int l = 0; l < L; ++l) {
    const EdgeFlat& fc = tc.blocks[l].flat;
    const EdgeFlat& fn = tn.blocks[l].flat;
    std::map<std::pair<int, int>, int> where;
    for (int k = 0; k < fn.count(); ++k) where[{fn.heads[k], fn.tails[k]}] = k;
    std::vector<int> ic, in;
    for (int k = 0; k < fc.count(); ++k) {
      auto it = where.find({fc.heads[k], fc.tails[k]});
      if (it != where.end()) {
        ic.push_back(k);
        in.push_back(it->second);
      }
    }
    if (ic.empty()) continue;
    Value d = sub(gather_rows(tc.blocks[l].scores, ic), gather_rows(tn.blocks[l].scores, in));
    total = add(total, mean(mul(d, d)));
  }
  return mul(total, 1.0 / double(L));
}

struct TotalLoss {
  Value value;
  LossBreakdown breakdown;
};

// Eq-17-style weighted total with stage gating for the counterfactual term.
inline TotalLoss total_loss(const Value& dis, const Value& cou, const Value& scl,
                            const Value& con, double lambda1, double lambda2,
                            double lambda3, bool cou_active) {
  if (lambda1 < 0.0 || lambda2 < 0.0 || lambda3 < 0.0)
    throw ConfigError("total_loss: negative lambda");
  TotalLoss t;
  t.value = dis;
  t.breakdown.dis = dis.item();
  if (cou_active && cou.defined()) {
    t.value = add(t.value, mul(cou, lambda1));
    t.breakdown.cou = cou.item();
  }
  if (scl.defined()) {
    t.value = add(t.value, mul(scl, lambda2));
    t.breakdown.scl = scl.item();
  }
  if (con.defined()) {
    t.value = add(t.value, mul(con, lambda3));
    t.breakdown.con = con.item();
  }
  t.breakdown.total = t.value.item();
  return t;
}

}  // namespace gpro
