#pragma once

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "gpro/value.hpp"

namespace gpro {

namespace detail {

constexpr double kGuardEps = 1e-8;   // div / log / sqrt floor
constexpr double kStdEps = 1e-5;     // added to population variance before sqrt
constexpr double kProbFloor = 1e-12; // GCE target-probability floor

inline void check_nonempty(const Value& v, const char* op) {
  if (!v.defined() || v.data().empty())
    throw std::invalid_argument(std::string(op) + ": empty input");
}

// Sign-preserving floor used for division denominators.
inline double guard_div(double x) {
  if (x >= 0.0) return x < kGuardEps ? kGuardEps : x;
  return x > -kGuardEps ? -kGuardEps : x;
}

inline bool bcast_ok(int a, int b) { return a == b || a == 1 || b == 1; }

}  // namespace detail

// ---------------------------------------------------------------------------
// elementwise binary ops with broadcasting over unit axes
// ---------------------------------------------------------------------------

enum class BinKind { Add, Sub, Mul, Div };

inline Value binary_op(BinKind kind, const Value& a, const Value& b) {
  detail::check_nonempty(a, "binary");
  detail::check_nonempty(b, "binary");
  const Matrix& A = a.data();
  const Matrix& B = b.data();
  if (!detail::bcast_ok(A.rows, B.rows) || !detail::bcast_ok(A.cols, B.cols))
    throw std::invalid_argument("elementwise: shape mismatch " + A.shape_str() + " vs " +
                                B.shape_str());
  const int R = std::max(A.rows, B.rows);
  const int C = std::max(A.cols, B.cols);
  Matrix out(R, C);
  for (int i = 0; i < R; ++i) {
    for (int j = 0; j < C; ++j) {
      const double x = A(A.rows == R ? i : 0, A.cols == C ? j : 0);
      const double y = B(B.rows == R ? i : 0, B.cols == C ? j : 0);
      switch (kind) {
        case BinKind::Add: out(i, j) = x + y; break;
        case BinKind::Sub: out(i, j) = x - y; break;
        case BinKind::Mul: out(i, j) = x * y; break;
        case BinKind::Div: out(i, j) = x / detail::guard_div(y); break;
      }
    }
  }
  auto pa = a.node_;
  auto pb = b.node_;
  return make_op(std::move(out), {a, b}, [kind, pa, pb, R, C](Value::Node& n) {
    const Matrix& A = pa->data;
    const Matrix& B = pb->data;
    const bool need_a = pa->requires_grad;
    const bool need_b = pb->requires_grad;
    if (need_a) Value::ensure_grad(*pa);
    if (need_b) Value::ensure_grad(*pb);
    for (int i = 0; i < R; ++i) {
      for (int j = 0; j < C; ++j) {
        const double g = n.grad(i, j);
        if (g == 0.0) continue;
        const int ai = A.rows == R ? i : 0, aj = A.cols == C ? j : 0;
        const int bi = B.rows == R ? i : 0, bj = B.cols == C ? j : 0;
        double da = 0.0, db = 0.0;
        switch (kind) {
          case BinKind::Add: da = 1.0; db = 1.0; break;
          case BinKind::Sub: da = 1.0; db = -1.0; break;
          case BinKind::Mul: da = B(bi, bj); db = A(ai, aj); break;
          case BinKind::Div: {
            const double d = detail::guard_div(B(bi, bj));
            da = 1.0 / d;
            db = -A(ai, aj) / (d * d);
            break;
          }
        }
        if (need_a) pa->grad(ai, aj) += g * da;
        if (need_b) pb->grad(bi, bj) += g * db;
      }
    }
  });
}

inline Value add(const Value& a, const Value& b) { return binary_op(BinKind::Add, a, b); }
inline Value sub(const Value& a, const Value& b) { return binary_op(BinKind::Sub, a, b); }
inline Value mul(const Value& a, const Value& b) { return binary_op(BinKind::Mul, a, b); }
inline Value div(const Value& a, const Value& b) { return binary_op(BinKind::Div, a, b); }

inline Value add(const Value& a, double s) { return add(a, Value::scalar(s)); }
inline Value sub(const Value& a, double s) { return sub(a, Value::scalar(s)); }
inline Value mul(const Value& a, double s) { return mul(a, Value::scalar(s)); }
inline Value div(const Value& a, double s) { return div(a, Value::scalar(s)); }

inline Value operator+(const Value& a, const Value& b) { return add(a, b); }
inline Value operator-(const Value& a, const Value& b) { return sub(a, b); }
inline Value operator*(const Value& a, const Value& b) { return mul(a, b); }
inline Value operator*(const Value& a, double s) { return mul(a, s); }
inline Value operator*(double s, const Value& a) { return mul(a, s); }

// ---------------------------------------------------------------------------
// elementwise unary ops
// ---------------------------------------------------------------------------

enum class UnaryKind { Relu, Sigmoid, Exp, Log, Sqrt };

inline Value unary_op(UnaryKind kind, const Value& x) {
  detail::check_nonempty(x, "unary");
  const Matrix& X = x.data();
  Matrix out(X.rows, X.cols);
  for (int i = 0; i < X.size(); ++i) {
    const double v = X.a[i];
    switch (kind) {
      case UnaryKind::Relu: out.a[i] = v > 0.0 ? v : 0.0; break;
      case UnaryKind::Sigmoid: out.a[i] = 1.0 / (1.0 + std::exp(-v)); break;
      case UnaryKind::Exp: out.a[i] = std::exp(v); break;
      case UnaryKind::Log: out.a[i] = std::log(std::max(v, detail::kGuardEps)); break;
      case UnaryKind::Sqrt: out.a[i] = std::sqrt(std::max(v, detail::kGuardEps)); break;
    }
  }
  auto px = x.node_;
  Matrix saved = out;  // reuse forward values in the backward rules
  return make_op(std::move(out), {x}, [kind, px, saved](Value::Node& n) {
    Value::ensure_grad(*px);
    for (int i = 0; i < n.grad.size(); ++i) {
      const double g = n.grad.a[i];
      if (g == 0.0) continue;
      const double v = px->data.a[i];
      double d = 0.0;
      switch (kind) {
        case UnaryKind::Relu: d = v > 0.0 ? 1.0 : 0.0; break;
        case UnaryKind::Sigmoid: d = saved.a[i] * (1.0 - saved.a[i]); break;
        case UnaryKind::Exp: d = saved.a[i]; break;
        case UnaryKind::Log: d = 1.0 / std::max(v, detail::kGuardEps); break;
        case UnaryKind::Sqrt: d = 0.5 / saved.a[i]; break;
      }
      px->grad.a[i] += g * d;
    }
  });
}

inline Value relu(const Value& x) { return unary_op(UnaryKind::Relu, x); }
inline Value sigmoid(const Value& x) { return unary_op(UnaryKind::Sigmoid, x); }
inline Value exp(const Value& x) { return unary_op(UnaryKind::Exp, x); }
inline Value log(const Value& x) { return unary_op(UnaryKind::Log, x); }
inline Value sqrt(const Value& x) { return unary_op(UnaryKind::Sqrt, x); }

// ---------------------------------------------------------------------------
// matmul
// ---------------------------------------------------------------------------

inline Value matmul(const Value& a, const Value& b) {
  detail::check_nonempty(a, "matmul");
  detail::check_nonempty(b, "matmul");
  if (a.cols() != b.rows())
    throw std::invalid_argument("matmul: shape mismatch " + a.data().shape_str() + " x " +
                                b.data().shape_str());
  Matrix out = mat_mul(a.data(), b.data());
  auto pa = a.node_;
  auto pb = b.node_;
  return make_op(std::move(out), {a, b}, [pa, pb](Value::Node& n) {
    if (pa->requires_grad) Value::accum(*pa, mat_mul_nt(n.grad, pb->data));
    if (pb->requires_grad) Value::accum(*pb, mat_mul_tn(pa->data, n.grad));
  });
}

// Multiply by a constant block-diagonal matrix (normalized adjacency).
inline Value block_matmul(const BlockDiag& A, const Value& x) {
  detail::check_nonempty(x, "block_matmul");
  Matrix out = blockdiag_mul(A, x.data());
  auto px = x.node_;
  // The BlockDiag is captured by value; blocks are small per-graph matrices.
  return make_op(std::move(out), {x},
                 [A, px](Value::Node& n) { Value::accum(*px, blockdiag_mul_t(A, n.grad)); });
}

inline Value transpose(const Value& x) {
  detail::check_nonempty(x, "transpose");
  Matrix out = mat_transpose(x.data());
  auto px = x.node_;
  return make_op(std::move(out), {x},
                 [px](Value::Node& n) { Value::accum(*px, mat_transpose(n.grad)); });
}

// ---------------------------------------------------------------------------
// reductions
// ---------------------------------------------------------------------------

inline Value sum(const Value& x) {
  detail::check_nonempty(x, "sum");
  double s = 0.0;
  for (double v : x.data().a) s += v;
  auto px = x.node_;
  return make_op(Matrix(1, 1, s), {x}, [px](Value::Node& n) {
    Value::ensure_grad(*px);
    const double g = n.grad.a[0];
    for (int i = 0; i < px->grad.size(); ++i) px->grad.a[i] += g;
  });
}

inline Value mean(const Value& x) {
  detail::check_nonempty(x, "mean");
  return mul(sum(x), 1.0 / double(x.data().size()));
}

inline Value row_sum(const Value& x) {
  detail::check_nonempty(x, "row_sum");
  const Matrix& X = x.data();
  Matrix out(X.rows, 1);
  for (int i = 0; i < X.rows; ++i) {
    double s = 0.0;
    for (int j = 0; j < X.cols; ++j) s += X(i, j);
    out(i, 0) = s;
  }
  auto px = x.node_;
  return make_op(std::move(out), {x}, [px](Value::Node& n) {
    Value::ensure_grad(*px);
    for (int i = 0; i < px->data.rows; ++i) {
      const double g = n.grad(i, 0);
      for (int j = 0; j < px->data.cols; ++j) px->grad(i, j) += g;
    }
  });
}

inline Value row_mean(const Value& x) {
  detail::check_nonempty(x, "row_mean");
  return mul(row_sum(x), 1.0 / double(x.data().cols));
}

// Per-row population standard deviation with kStdEps added to the variance
// before the square root, so constant rows stay differentiable.
inline Value row_std(const Value& x) {
  detail::check_nonempty(x, "row_std");
  const Matrix& X = x.data();
  const int C = X.cols;
  Matrix out(X.rows, 1);
  Matrix mu(X.rows, 1);
  for (int i = 0; i < X.rows; ++i) {
    double m = 0.0;
    for (int j = 0; j < C; ++j) m += X(i, j);
    m /= C;
    double var = 0.0;
    for (int j = 0; j < C; ++j) {
      const double d = X(i, j) - m;
      var += d * d;
    }
    var /= C;
    mu(i, 0) = m;
    out(i, 0) = std::sqrt(var + detail::kStdEps);
  }
  auto px = x.node_;
  Matrix saved_std = out, saved_mu = mu;
  return make_op(std::move(out), {x}, [px, saved_std, saved_mu, C](Value::Node& n) {
    Value::ensure_grad(*px);
    for (int i = 0; i < px->data.rows; ++i) {
      const double g = n.grad(i, 0);
      if (g == 0.0) continue;
      const double inv = 1.0 / (double(C) * saved_std(i, 0));
      for (int j = 0; j < C; ++j)
        px->grad(i, j) += g * (px->data(i, j) - saved_mu(i, 0)) * inv;
    }
  });
}

inline Value col_mean(const Value& x) {
  detail::check_nonempty(x, "col_mean");
  const Matrix& X = x.data();
  Matrix out(1, X.cols);
  for (int j = 0; j < X.cols; ++j) {
    double s = 0.0;
    for (int i = 0; i < X.rows; ++i) s += X(i, j);
    out(0, j) = s / X.rows;
  }
  auto px = x.node_;
  return make_op(std::move(out), {x}, [px](Value::Node& n) {
    Value::ensure_grad(*px);
    const double inv = 1.0 / px->data.rows;
    for (int i = 0; i < px->data.rows; ++i)
      for (int j = 0; j < px->data.cols; ++j) px->grad(i, j) += n.grad(0, j) * inv;
  });
}

// ---------------------------------------------------------------------------
// structural ops
// ---------------------------------------------------------------------------

inline Value concat_cols(const Value& a, const Value& b) {
  detail::check_nonempty(a, "concat_cols");
  detail::check_nonempty(b, "concat_cols");
  if (a.rows() != b.rows())
    throw std::invalid_argument("concat_cols: row mismatch " + a.data().shape_str() + " vs " +
                                b.data().shape_str());
  const int ca = a.cols(), cb = b.cols();
  Matrix out(a.rows(), ca + cb);
  for (int i = 0; i < a.rows(); ++i) {
    for (int j = 0; j < ca; ++j) out(i, j) = a.data()(i, j);
    for (int j = 0; j < cb; ++j) out(i, ca + j) = b.data()(i, j);
  }
  auto pa = a.node_;
  auto pb = b.node_;
  return make_op(std::move(out), {a, b}, [pa, pb, ca, cb](Value::Node& n) {
    if (pa->requires_grad) {
      Value::ensure_grad(*pa);
      for (int i = 0; i < pa->data.rows; ++i)
        for (int j = 0; j < ca; ++j) pa->grad(i, j) += n.grad(i, j);
    }
    if (pb->requires_grad) {
      Value::ensure_grad(*pb);
      for (int i = 0; i < pb->data.rows; ++i)
        for (int j = 0; j < cb; ++j) pb->grad(i, j) += n.grad(i, ca + j);
    }
  });
}

inline Value gather_rows(const Value& x, const std::vector<int>& idx) {
  detail::check_nonempty(x, "gather_rows");
  const Matrix& X = x.data();
  for (int i : idx)
    if (i < 0 || i >= X.rows)
      throw std::invalid_argument("gather_rows: index " + std::to_string(i) +
                                  " out of range [0," + std::to_string(X.rows) + ")");
  Matrix out(int(idx.size()), X.cols);
  for (size_t r = 0; r < idx.size(); ++r)
    for (int j = 0; j < X.cols; ++j) out(int(r), j) = X(idx[r], j);
  auto px = x.node_;
  return make_op(std::move(out), {x}, [px, idx](Value::Node& n) {
    Value::ensure_grad(*px);
    for (size_t r = 0; r < idx.size(); ++r)
      for (int j = 0; j < px->data.cols; ++j) px->grad(idx[r], j) += n.grad(int(r), j);
  });
}

// Per-graph mean pooling: ranges are [begin,end) node index pairs.
inline Value mean_pool_rows(const Value& x, const std::vector<std::pair<int, int>>& ranges) {
  detail::check_nonempty(x, "mean_pool_rows");
  const Matrix& X = x.data();
  Matrix out(int(ranges.size()), X.cols);
  for (size_t g = 0; g < ranges.size(); ++g) {
    const auto [b, e] = ranges[g];
    if (b < 0 || e > X.rows || b >= e)
      throw std::invalid_argument("mean_pool_rows: bad range");
    for (int i = b; i < e; ++i)
      for (int j = 0; j < X.cols; ++j) out(int(g), j) += X(i, j);
    for (int j = 0; j < X.cols; ++j) out(int(g), j) /= double(e - b);
  }
  auto px = x.node_;
  return make_op(std::move(out), {x}, [px, ranges](Value::Node& n) {
    Value::ensure_grad(*px);
    for (size_t g = 0; g < ranges.size(); ++g) {
      const auto [b, e] = ranges[g];
      const double inv = 1.0 / double(e - b);
      for (int i = b; i < e; ++i)
        for (int j = 0; j < px->data.cols; ++j) px->grad(i, j) += n.grad(int(g), j) * inv;
    }
  });
}

// ---------------------------------------------------------------------------
// classification losses (per-sample vectors; reduce with mean() as needed)
// ---------------------------------------------------------------------------

namespace detail {

inline void check_labels(const Value& logits, const std::vector<int>& labels) {
  if (int(labels.size()) != logits.rows())
    throw std::invalid_argument("labels: expected " + std::to_string(logits.rows()) +
                                " labels, got " + std::to_string(labels.size()));
  for (int y : labels)
    if (y < 0 || y >= logits.cols())
      throw std::invalid_argument("label " + std::to_string(y) + " out of range [0," +
                                  std::to_string(logits.cols()) + ")");
}

inline Matrix softmax_rows(const Matrix& z) {
  Matrix p(z.rows, z.cols);
  for (int i = 0; i < z.rows; ++i) {
    double m = z(i, 0);
    for (int j = 1; j < z.cols; ++j) m = std::max(m, z(i, j));
    double s = 0.0;
    for (int j = 0; j < z.cols; ++j) s += (p(i, j) = std::exp(z(i, j) - m));
    for (int j = 0; j < z.cols; ++j) p(i, j) /= s;
  }
  return p;
}

}  // namespace detail

// Per-sample cross-entropy: -log softmax(z)[i, y_i], max-stabilized.
inline Value cross_entropy_rows(const Value& logits, const std::vector<int>& labels) {
  detail::check_nonempty(logits, "cross_entropy");
  detail::check_labels(logits, labels);
  const Matrix& Z = logits.data();
  Matrix probs = detail::softmax_rows(Z);
  Matrix out(Z.rows, 1);
  for (int i = 0; i < Z.rows; ++i)
    out(i, 0) = -std::log(std::max(probs(i, labels[i]), detail::kProbFloor));
  auto pz = logits.node_;
  return make_op(std::move(out), {logits}, [pz, probs, labels](Value::Node& n) {
    Value::ensure_grad(*pz);
    for (int i = 0; i < pz->data.rows; ++i) {
      const double g = n.grad(i, 0);
      if (g == 0.0) continue;
      for (int j = 0; j < pz->data.cols; ++j)
        pz->grad(i, j) += g * (probs(i, j) - (j == labels[i] ? 1.0 : 0.0));
    }
  });
}

// Per-sample generalized cross-entropy (1 - p_y^q)/q. Its adjoint is the
// cross-entropy adjoint scaled by p_y^q.
inline Value gce_rows(const Value& logits, const std::vector<int>& labels, double q) {
  detail::check_nonempty(logits, "gce");
  detail::check_labels(logits, labels);
  if (q <= 0.0 || q > 1.0) throw std::invalid_argument("gce: q must be in (0,1]");
  const Matrix& Z = logits.data();
  Matrix probs = detail::softmax_rows(Z);
  Matrix out(Z.rows, 1);
  for (int i = 0; i < Z.rows; ++i) {
    const double py = std::max(probs(i, labels[i]), detail::kProbFloor);
    out(i, 0) = (1.0 - std::pow(py, q)) / q;
  }
  auto pz = logits.node_;
  return make_op(std::move(out), {logits}, [pz, probs, labels, q](Value::Node& n) {
    Value::ensure_grad(*pz);
    for (int i = 0; i < pz->data.rows; ++i) {
      const double g = n.grad(i, 0);
      if (g == 0.0) continue;
      const double py = std::max(probs(i, labels[i]), detail::kProbFloor);
      const double scale = std::pow(py, q);
      for (int j = 0; j < pz->data.cols; ++j)
        pz->grad(i, j) += g * scale * (probs(i, j) - (j == labels[i] ? 1.0 : 0.0));
    }
  });
}

// Batch-mean cross-entropy plus the per-sample vector it was reduced from.
struct CeResult {
  Value loss;       // 1x1
  Value per_sample; // Nx1
};

inline CeResult softmax_cross_entropy(const Value& logits, const std::vector<int>& labels) {
  Value rows = cross_entropy_rows(logits, labels);
  return {mean(rows), rows};
}

}  // namespace gpro
