#pragma once

#include <cmath>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include "gpro/common.hpp"

namespace gpro {

// Dense row-major matrix of doubles. Everything in the training path is
// desk-scale, so there is no sparse storage; block-diagonal structure is
// handled separately by BlockDiag.
struct Matrix {
  int rows = 0;
  int cols = 0;
  std::vector<double> a;

  Matrix() = default;
  Matrix(int r, int c, double fill = 0.0) : rows(r), cols(c), a(size_t(r) * c, fill) {
    if (r < 0 || c < 0) throw std::invalid_argument("Matrix: negative dimension");
  }

  double& operator()(int i, int j) { return a[size_t(i) * cols + j]; }
  double operator()(int i, int j) const { return a[size_t(i) * cols + j]; }

  int size() const { return rows * cols; }
  bool empty() const { return size() == 0; }

  Matrix& operator+=(const Matrix& o) {
    for (int i = 0; i < size(); ++i) a[i] += o.a[i];
    return *this;
  }

  void fill(double v) { std::fill(a.begin(), a.end(), v); }

  static Matrix identity(int n) {
    Matrix m(n, n);
    for (int i = 0; i < n; ++i) m(i, i) = 1.0;
    return m;
  }

  std::string shape_str() const { return std::to_string(rows) + "x" + std::to_string(cols); }
};

inline Matrix mat_mul(const Matrix& a, const Matrix& b) {
  Matrix c(a.rows, b.cols);
  for (int i = 0; i < a.rows; ++i) {
    for (int k = 0; k < a.cols; ++k) {
      const double aik = a(i, k);
      if (aik == 0.0) continue;
      const double* brow = &b.a[size_t(k) * b.cols];
      double* crow = &c.a[size_t(i) * c.cols];
      for (int j = 0; j < b.cols; ++j) crow[j] += aik * brow[j];
    }
  }
  return c;
}

// a^T * b
inline Matrix mat_mul_tn(const Matrix& a, const Matrix& b) {
  Matrix c(a.cols, b.cols);
  for (int k = 0; k < a.rows; ++k) {
    for (int i = 0; i < a.cols; ++i) {
      const double aki = a(k, i);
      if (aki == 0.0) continue;
      const double* brow = &b.a[size_t(k) * b.cols];
      double* crow = &c.a[size_t(i) * c.cols];
      for (int j = 0; j < b.cols; ++j) crow[j] += aki * brow[j];
    }
  }
  return c;
}

// a * b^T
inline Matrix mat_mul_nt(const Matrix& a, const Matrix& b) {
  Matrix c(a.rows, b.rows);
  for (int i = 0; i < a.rows; ++i) {
    for (int j = 0; j < b.rows; ++j) {
      double s = 0.0;
      const double* ar = &a.a[size_t(i) * a.cols];
      const double* br = &b.a[size_t(j) * b.cols];
      for (int k = 0; k < a.cols; ++k) s += ar[k] * br[k];
      c(i, j) = s;
    }
  }
  return c;
}

inline Matrix mat_transpose(const Matrix& m) {
  Matrix t(m.cols, m.rows);
  for (int i = 0; i < m.rows; ++i)
    for (int j = 0; j < m.cols; ++j) t(j, i) = m(i, j);
  return t;
}

// Block-diagonal square matrix: one dense block per graph in a batch.
// Used for normalized adjacencies, where multiplying the full dense
// batch matrix would waste nearly all the work on zero blocks.
struct BlockDiag {
  std::vector<Matrix> blocks;
  std::vector<int> offsets;  // size blocks+1, offsets.back() == dim
  int dim = 0;

  static BlockDiag from_blocks(std::vector<Matrix> bs) {
    BlockDiag d;
    d.blocks = std::move(bs);
    d.offsets.push_back(0);
    for (const Matrix& b : d.blocks) {
      if (b.rows != b.cols) throw std::invalid_argument("BlockDiag: block not square");
      d.offsets.push_back(d.offsets.back() + b.rows);
    }
    d.dim = d.offsets.back();
    return d;
  }

  // Materialize the full dense matrix (tests and small inspections only).
  Matrix dense() const {
    Matrix m(dim, dim);
    for (size_t g = 0; g < blocks.size(); ++g) {
      const int off = offsets[g];
      const Matrix& b = blocks[g];
      for (int i = 0; i < b.rows; ++i)
        for (int j = 0; j < b.cols; ++j) m(off + i, off + j) = b(i, j);
    }
    return m;
  }
};

// y = D * x with D block-diagonal, x (dim x c).
inline Matrix blockdiag_mul(const BlockDiag& d, const Matrix& x) {
  if (x.rows != d.dim)
    throw std::invalid_argument("blockdiag_mul: shape mismatch " + std::to_string(d.dim) +
                                " vs " + x.shape_str());
  Matrix y(x.rows, x.cols);
  for (size_t g = 0; g < d.blocks.size(); ++g) {
    const Matrix& b = d.blocks[g];
    const int off = d.offsets[g];
    for (int i = 0; i < b.rows; ++i) {
      double* yrow = &y.a[size_t(off + i) * y.cols];
      for (int k = 0; k < b.cols; ++k) {
        const double bik = b(i, k);
        if (bik == 0.0) continue;
        const double* xrow = &x.a[size_t(off + k) * x.cols];
        for (int j = 0; j < x.cols; ++j) yrow[j] += bik * xrow[j];
      }
    }
  }
  return y;
}

// y = D^T * x.
inline Matrix blockdiag_mul_t(const BlockDiag& d, const Matrix& x) {
  Matrix y(x.rows, x.cols);
  for (size_t g = 0; g < d.blocks.size(); ++g) {
    const Matrix& b = d.blocks[g];
    const int off = d.offsets[g];
    for (int k = 0; k < b.rows; ++k) {
      const double* xrow = &x.a[size_t(off + k) * x.cols];
      for (int i = 0; i < b.cols; ++i) {
        const double bki = b(k, i);
        if (bki == 0.0) continue;
        double* yrow = &y.a[size_t(off + i) * y.cols];
        for (int j = 0; j < x.cols; ++j) yrow[j] += bki * xrow[j];
      }
    }
  }
  return y;
}

inline Matrix xavier_uniform(int rows, int cols, std::mt19937_64& rng) {
  Matrix m(rows, cols);
  const double bound = std::sqrt(6.0 / double(rows + cols));
  std::uniform_real_distribution<double> dist(-bound, bound);
  for (double& v : m.a) v = dist(rng);
  return m;
}

}  // namespace gpro
