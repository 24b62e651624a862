#pragma once

// Dense cosine similarity matrices and their sparsification by k-nearest
// neighbors or by per-row similarity distribution.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <stdexcept>
#include <string>
#include <tuple>
#include <vector>

#include "stck/matrix.hpp"

namespace stck {

// Symmetric n x n similarity matrix with unit diagonal.
struct SimMatrix {
  int n = 0;
  std::vector<double> data;

  SimMatrix() = default;
  explicit SimMatrix(int n_) : n(n_), data(static_cast<std::size_t>(n_) * n_, 0.0) {
    for (int i = 0; i < n_; ++i) at(i, i) = 1.0;
  }

  double& at(int i, int j) { return data[static_cast<std::size_t>(i) * n + j]; }
  double at(int i, int j) const { return data[static_cast<std::size_t>(i) * n + j]; }
};

// Symmetric sparse similarity matrix. The diagonal is implicitly 1; rows
// store the retained off-diagonal entries sorted by column. Support is
// symmetric: (i,j) is stored iff (j,i) is.
struct SparseSimMatrix {
  int n = 0;
  std::vector<SparseRow> rows;

  bool retained(int i, int j) const {
    const auto& r = rows[i];
    auto it = std::lower_bound(r.begin(), r.end(), j,
                               [](const SparseEntry& e, int col) { return e.first < col; });
    return it != r.end() && it->first == j;
  }

  // Value convention: diagonal 1, dropped entries 0.
  double value(int i, int j) const {
    if (i == j) return 1.0;
    const auto& r = rows[i];
    auto it = std::lower_bound(r.begin(), r.end(), j,
                               [](const SparseEntry& e, int col) { return e.first < col; });
    return (it != r.end() && it->first == j) ? it->second : 0.0;
  }
};

// s_ij = cos(x_i, x_j); rows with zero norm give 0 off-diagonal; the diagonal
// is forced to 1. Values are clamped to the cosine range.
inline SimMatrix cosine_matrix(const DenseMatrix& x) {
  SimMatrix s(x.rows);
  std::vector<double> norms(x.rows);
  for (int i = 0; i < x.rows; ++i) norms[i] = norm2(x.row(i));
  for (int i = 0; i < x.rows; ++i) {
    for (int j = i + 1; j < x.rows; ++j) {
      double v = 0.0;
      if (norms[i] > 0.0 && norms[j] > 0.0) {
        v = dot(x.row(i), x.row(j)) / (norms[i] * norms[j]);
        v = std::clamp(v, -1.0, 1.0);
      }
      s.at(i, j) = v;
      s.at(j, i) = v;
    }
  }
  return s;
}

// Keeps the k largest off-diagonal entries of each row (ties broken toward
// the lower column index), then symmetrizes: a pair is retained if either
// direction marked it, so every row ends with at least k entries.
inline SparseSimMatrix sparsify_knn(const SimMatrix& s, int k) {
  const int n = s.n;
  if (k < 1 || k > n - 1) {
    throw std::invalid_argument("sparsify_knn: k must be in [1, n-1], got " + std::to_string(k));
  }
  std::vector<std::vector<char>> keep(n, std::vector<char>(n, 0));
  std::vector<int> order;
  order.reserve(n - 1);
  for (int i = 0; i < n; ++i) {
    order.clear();
    for (int j = 0; j < n; ++j) {
      if (j != i) order.push_back(j);
    }
    std::partial_sort(order.begin(), order.begin() + k, order.end(), [&](int a, int b) {
      if (s.at(i, a) != s.at(i, b)) return s.at(i, a) > s.at(i, b);
      return a < b;
    });
    for (int r = 0; r < k; ++r) keep[i][order[r]] = 1;
  }

  SparseSimMatrix m;
  m.n = n;
  m.rows.resize(n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      if (j != i && (keep[i][j] || keep[j][i])) m.rows[i].emplace_back(j, s.at(i, j));
    }
  }
  return m;
}

namespace detail {

// Per-row deviation scores a_ij = (s_ij - mu_i) / sigma_i over the
// off-diagonal entries of row i; sigma_i is the population standard
// deviation of those n-1 values. A constant row (sigma = 0) gets a_ij = 0.
inline std::vector<double> deviation_scores(const SimMatrix& s) {
  const int n = s.n;
  std::vector<double> a(static_cast<std::size_t>(n) * n, 0.0);
  for (int i = 0; i < n; ++i) {
    double sum = 0.0;
    for (int j = 0; j < n; ++j) {
      if (j != i) sum += s.at(i, j);
    }
    const double mu = sum / (n - 1);
    double var = 0.0;
    for (int j = 0; j < n; ++j) {
      if (j != i) {
        const double d = s.at(i, j) - mu;
        var += d * d;
      }
    }
    const double sigma = std::sqrt(var / (n - 1));
    if (sigma > 0.0) {
      for (int j = 0; j < n; ++j) {
        if (j != i) a[static_cast<std::size_t>(i) * n + j] = (s.at(i, j) - mu) / sigma;
      }
    }
  }
  return a;
}

}  // namespace detail

// Similarity-distribution sparsification. Exactly N = floor(n*(n/K-1)/2)
// above-diagonal pairs are retained, chosen as the N largest values of
// max(a_ij, a_ji); ties go to the lexicographically smaller (i, j).
inline SparseSimMatrix sparsify_sd(const SimMatrix& s, int num_clusters) {
  const int n = s.n;
  if (num_clusters < 2 || num_clusters > n) {
    throw std::invalid_argument("sparsify_sd: K must be in [2, n], got " +
                                std::to_string(num_clusters));
  }
  const double l = static_cast<double>(n) / num_clusters - 1.0;
  const auto retain = static_cast<long long>(std::floor(n * l / 2.0));

  const auto a = detail::deviation_scores(s);
  std::vector<std::tuple<double, int, int>> pairs;
  pairs.reserve(static_cast<std::size_t>(n) * (n - 1) / 2);
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) {
      pairs.emplace_back(std::max(a[static_cast<std::size_t>(i) * n + j],
                                  a[static_cast<std::size_t>(j) * n + i]),
                         i, j);
    }
  }
  std::sort(pairs.begin(), pairs.end(), [](const auto& x, const auto& y) {
    if (std::get<0>(x) != std::get<0>(y)) return std::get<0>(x) > std::get<0>(y);
    if (std::get<1>(x) != std::get<1>(y)) return std::get<1>(x) < std::get<1>(y);
    return std::get<2>(x) < std::get<2>(y);
  });

  SparseSimMatrix m;
  m.n = n;
  m.rows.resize(n);
  for (long long r = 0; r < retain && r < static_cast<long long>(pairs.size()); ++r) {
    const auto [score, i, j] = pairs[static_cast<std::size_t>(r)];
    m.rows[i].emplace_back(j, s.at(i, j));
    m.rows[j].emplace_back(i, s.at(j, i));
  }
  for (auto& row : m.rows) std::sort(row.begin(), row.end());
  return m;
}

// Number of retained strictly-above-diagonal entries (support members,
// independent of their stored value).
inline long long retained_count(const SparseSimMatrix& m) {
  long long count = 0;
  for (int i = 0; i < m.n; ++i) {
    for (const auto& [j, v] : m.rows[i]) {
      if (j > i) ++count;
    }
  }
  return count;
}

// Degenerate sparse view of a dense matrix: full off-diagonal support.
inline SparseSimMatrix dense_as_sparse(const SimMatrix& s) {
  SparseSimMatrix m;
  m.n = s.n;
  m.rows.resize(s.n);
  for (int i = 0; i < s.n; ++i) {
    for (int j = 0; j < s.n; ++j) {
      if (j != i) m.rows[i].emplace_back(j, s.at(i, j));
    }
  }
  return m;
}

// CSV serialization: header line `n`, then `i,j,value` for retained pairs
// with i < j. The loader rebuilds the symmetric support.
inline void save_sparse_csv(const SparseSimMatrix& m, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write sparse matrix file: " + path);
  out << m.n << '\n';
  char buf[80];
  for (int i = 0; i < m.n; ++i) {
    for (const auto& [j, v] : m.rows[i]) {
      if (j > i) {
        std::snprintf(buf, sizeof(buf), "%d,%d,%.17g\n", i, j, v);
        out << buf;
      }
    }
  }
}

inline SparseSimMatrix load_sparse_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open sparse matrix file: " + path);
  SparseSimMatrix m;
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error(path + ": missing size header");
  m.n = std::stoi(line);
  m.rows.resize(m.n);
  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    int i, j;
    double v;
    if (std::sscanf(line.c_str(), "%d,%d,%lf", &i, &j, &v) != 3 || i < 0 || j <= i || j >= m.n) {
      throw std::runtime_error(path + " line " + std::to_string(line_no) + ": bad entry");
    }
    m.rows[i].emplace_back(j, v);
    m.rows[j].emplace_back(i, v);
  }
  for (auto& row : m.rows) std::sort(row.begin(), row.end());
  return m;
}

}  // namespace stck
