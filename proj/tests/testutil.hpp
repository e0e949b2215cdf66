#pragma once

#include <filesystem>
#include <functional>
#include <random>
#include <string>

#include "gpro/matrix.hpp"

namespace testutil {

using gpro::Matrix;

inline Matrix random_matrix(int r, int c, std::mt19937_64& rng, double lo = -2.0,
                            double hi = 2.0) {
  Matrix m(r, c);
  std::uniform_real_distribution<double> d(lo, hi);
  for (double& v : m.a) v = d(rng);
  return m;
}

// Central finite differences of a scalar functional with respect to x. The
// functional must re-read x on every call; this is the independent oracle
// for every analytic gradient in the suite.
inline Matrix fd_gradient(Matrix& x, const std::function<double()>& eval, double h = 1e-5) {
  Matrix g(x.rows, x.cols);
  for (int i = 0; i < x.size(); ++i) {
    const double keep = x.a[i];
    x.a[i] = keep + h;
    const double up = eval();
    x.a[i] = keep - h;
    const double down = eval();
    x.a[i] = keep;
    g.a[i] = (up - down) / (2.0 * h);
  }
  return g;
}

// Max elementwise |a-b| / max(1, |a|, |b|): relative where the gradient is
// large, absolute where finite differences would amplify noise.
inline double max_rel_err(const Matrix& a, const Matrix& b) {
  double worst = 0.0;
  for (int i = 0; i < a.size(); ++i) {
    const double scale = std::max({1.0, std::abs(a.a[i]), std::abs(b.a[i])});
    worst = std::max(worst, std::abs(a.a[i] - b.a[i]) / scale);
  }
  return worst;
}

// Fresh scratch directory under the system temp root.
inline std::string temp_dir(const std::string& tag) {
  static int counter = 0;
  auto p = std::filesystem::temp_directory_path() /
           ("gpro_test_" + tag + "_" + std::to_string(counter++));
  std::filesystem::remove_all(p);
  std::filesystem::create_directories(p);
  return p.string();
}

inline std::string read_file(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  return std::string(std::istreambuf_iterator<char>(f), std::istreambuf_iterator<char>());
}

}  // namespace testutil
