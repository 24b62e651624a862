#pragma once

// The two models iterative classification depends on: Isolation Forest for
// per-cluster outlier detection and softmax (multinomial) logistic
// regression for reclassification.

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

#include "stck/matrix.hpp"
#include "stck/rng.hpp"
#include "stck/vectorize.hpp"

namespace stck {

// ---------------------------------------------------------------------------
// Isolation Forest
// ---------------------------------------------------------------------------

struct IsolationForestConfig {
  int trees = 100;
  int subsample = 256;
  double score_threshold = 0.5;
};

// Average unsuccessful-search path length in a BST of m nodes; used both to
// normalize scores and to credit unresolved leaves.
inline double iforest_c(int m) {
  if (m <= 1) return 0.0;
  if (m == 2) return 1.0;
  constexpr double kEulerGamma = 0.5772156649;
  const double h = std::log(static_cast<double>(m - 1)) + kEulerGamma;
  return 2.0 * h - 2.0 * static_cast<double>(m - 1) / m;
}

struct IsolationForest {
  struct Node {
    int feature = -1;  // -1 marks a leaf
    double split = 0.0;
    int left = -1;
    int right = -1;
    int size = 0;
  };
  struct Tree {
    std::vector<Node> nodes;
  };

  std::vector<Tree> trees;
  int dim = 0;
  int sample_size = 0;

  double path_length(std::span<const double> row, const Tree& tree) const {
    int node = 0;
    int depth = 0;
    for (;;) {
      const Node& nd = tree.nodes[node];
      if (nd.feature < 0) return depth + iforest_c(nd.size);
      node = row[nd.feature] < nd.split ? nd.left : nd.right;
      ++depth;
    }
  }

  // Anomaly score s(x) = 2^(-E[h(x)] / c(psi)), strictly inside (0, 1).
  double score(std::span<const double> row) const {
    double sum = 0.0;
    for (const auto& tree : trees) sum += path_length(row, tree);
    const double mean_path = sum / trees.size();
    return std::pow(2.0, -mean_path / iforest_c(sample_size));
  }
};

namespace detail {

inline int iforest_build_node(const DenseMatrix& x, std::vector<int>& idx, int begin, int end,
                              int depth, int height_limit, Rng& rng,
                              IsolationForest::Tree& tree) {
  const int node_id = static_cast<int>(tree.nodes.size());
  tree.nodes.push_back({});
  tree.nodes[node_id].size = end - begin;
  if (end - begin <= 1 || depth >= height_limit) return node_id;

  // Feature drawn uniformly at random; a handful of constant draws in a row
  // turns the node into a leaf (common on sparse rows).
  int feature = -1;
  double lo = 0.0, hi = 0.0;
  const int tries = std::min(x.cols, 32);
  for (int t = 0; t < tries; ++t) {
    const int f = static_cast<int>(rng.uniform_index(x.cols));
    lo = hi = x.at(idx[begin], f);
    for (int i = begin + 1; i < end; ++i) {
      lo = std::min(lo, x.at(idx[i], f));
      hi = std::max(hi, x.at(idx[i], f));
    }
    if (lo < hi) {
      feature = f;
      break;
    }
  }
  if (feature < 0) return node_id;

  const double split = rng.uniform(lo, hi);
  auto mid_it = std::partition(idx.begin() + begin, idx.begin() + end,
                               [&](int i) { return x.at(i, feature) < split; });
  const int mid = static_cast<int>(mid_it - idx.begin());
  if (mid == begin || mid == end) return node_id;  // split landed on the boundary

  tree.nodes[node_id].feature = feature;
  tree.nodes[node_id].split = split;
  const int left = iforest_build_node(x, idx, begin, mid, depth + 1, height_limit, rng, tree);
  tree.nodes[node_id].left = left;
  const int right = iforest_build_node(x, idx, mid, end, depth + 1, height_limit, rng, tree);
  tree.nodes[node_id].right = right;
  return node_id;
}

}  // namespace detail

// Builds trees on independent subsamples of size min(subsample, n) drawn
// without replacement; tree height is capped at ceil(log2(sample size)).
inline IsolationForest iforest_fit(const DenseMatrix& x, const IsolationForestConfig& cfg,
                                   Rng& rng) {
  const int n = x.rows;
  if (n < 2) throw std::invalid_argument("iforest_fit: need at least 2 rows");
  if (cfg.trees < 1 || cfg.subsample < 2) {
    throw std::invalid_argument("iforest_fit: trees must be >= 1 and subsample >= 2");
  }

  IsolationForest forest;
  forest.dim = x.cols;
  forest.sample_size = std::min(cfg.subsample, n);
  const int height_limit =
      static_cast<int>(std::ceil(std::log2(static_cast<double>(forest.sample_size))));

  std::vector<int> pool(n);
  for (int t = 0; t < cfg.trees; ++t) {
    std::iota(pool.begin(), pool.end(), 0);
    for (int i = 0; i < forest.sample_size; ++i) {
      const int j = i + static_cast<int>(rng.uniform_index(n - i));
      std::swap(pool[i], pool[j]);
    }
    std::vector<int> sample(pool.begin(), pool.begin() + forest.sample_size);
    IsolationForest::Tree tree;
    detail::iforest_build_node(x, sample, 0, forest.sample_size, 0, height_limit, rng, tree);
    forest.trees.push_back(std::move(tree));
  }
  return forest;
}

inline std::vector<double> iforest_scores(const IsolationForest& forest, const DenseMatrix& x) {
  if (x.cols != forest.dim) {
    throw std::invalid_argument("iforest_scores: dimension mismatch");
  }
  std::vector<double> out(x.rows);
  for (int i = 0; i < x.rows; ++i) out[i] = forest.score(x.row(i));
  return out;
}

inline std::vector<char> iforest_flag(const IsolationForest& forest, const DenseMatrix& x,
                                      double threshold = 0.5) {
  std::vector<char> flags(x.rows, 0);
  const auto scores = iforest_scores(forest, x);
  for (int i = 0; i < x.rows; ++i) flags[i] = scores[i] > threshold ? 1 : 0;
  return flags;
}

// Projects selected sparse rows onto the union of their nonzero term
// indices, so random feature draws act on a meaningful subspace.
struct DenseProjection {
  DenseMatrix rows;
  std::vector<int> active_terms;  // projected column -> original term index
};

inline DenseProjection dense_projection(const DocTermMatrix& tfidf, const std::vector<int>& ids) {
  DenseProjection proj;
  std::vector<int> term_map(tfidf.vocab_size, -1);
  for (int id : ids) {
    for (const auto& [term, w] : tfidf.rows[id]) {
      if (term_map[term] < 0) {
        term_map[term] = static_cast<int>(proj.active_terms.size());
        proj.active_terms.push_back(term);
      }
    }
  }
  const int cols = std::max<int>(1, static_cast<int>(proj.active_terms.size()));
  proj.rows = DenseMatrix(static_cast<int>(ids.size()), cols);
  for (std::size_t r = 0; r < ids.size(); ++r) {
    for (const auto& [term, w] : tfidf.rows[ids[r]]) {
      proj.rows.at(static_cast<int>(r), term_map[term]) = w;
    }
  }
  return proj;
}

// ---------------------------------------------------------------------------
// Multinomial logistic regression
// ---------------------------------------------------------------------------

struct LogRegConfig {
  double l2 = 1e-4;        // lambda for (lambda/2)*||W||_F^2; biases unpenalized
  int max_epochs = 500;
  double tol = 1e-7;       // stop when the loss improves by less than this
  double initial_step = 1.0;
};

struct MultinomialLogReg {
  int num_classes = 0;
  int dim = 0;
  std::vector<double> w;  // dim x K, term-major
  std::vector<double> b;  // K
  std::vector<double> loss_trace;
};

namespace detail {

inline void logreg_scores(const MultinomialLogReg& m, const SparseRow& row,
                          std::vector<double>& scores) {
  scores.assign(m.b.begin(), m.b.end());
  for (const auto& [term, v] : row) {
    if (term >= m.dim) {
      throw std::invalid_argument("logreg: term index " + std::to_string(term) +
                                  " out of range for dimension " + std::to_string(m.dim));
    }
    const double* wrow = m.w.data() + static_cast<std::size_t>(term) * m.num_classes;
    for (int k = 0; k < m.num_classes; ++k) scores[k] += v * wrow[k];
  }
}

inline void softmax_inplace(std::vector<double>& scores) {
  const double mx = *std::max_element(scores.begin(), scores.end());
  double sum = 0.0;
  for (double& s : scores) {
    s = std::exp(s - mx);
    sum += s;
  }
  for (double& s : scores) s /= sum;
}

}  // namespace detail

// Mean softmax cross-entropy plus the L2 penalty. Exposed separately so the
// gradient can be checked against finite differences.
inline double logreg_loss(const MultinomialLogReg& m, const std::vector<SparseRow>& rows,
                          const std::vector<int>& labels, double l2) {
  std::vector<double> scores;
  double loss = 0.0;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    detail::logreg_scores(m, rows[i], scores);
    const double mx = *std::max_element(scores.begin(), scores.end());
    double sum = 0.0;
    for (double s : scores) sum += std::exp(s - mx);
    loss += -(scores[labels[i]] - mx - std::log(sum));
  }
  loss /= static_cast<double>(rows.size());
  double reg = 0.0;
  for (double w : m.w) reg += w * w;
  return loss + 0.5 * l2 * reg;
}

// Gradient of logreg_loss with respect to (w, b), same layout as the model.
inline void logreg_gradient(const MultinomialLogReg& m, const std::vector<SparseRow>& rows,
                            const std::vector<int>& labels, double l2, std::vector<double>& gw,
                            std::vector<double>& gb) {
  gw.assign(m.w.size(), 0.0);
  gb.assign(m.b.size(), 0.0);
  const double inv_n = 1.0 / static_cast<double>(rows.size());
  std::vector<double> p;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    detail::logreg_scores(m, rows[i], p);
    detail::softmax_inplace(p);
    p[labels[i]] -= 1.0;
    for (int k = 0; k < m.num_classes; ++k) gb[k] += p[k] * inv_n;
    for (const auto& [term, v] : rows[i]) {
      double* grow = gw.data() + static_cast<std::size_t>(term) * m.num_classes;
      for (int k = 0; k < m.num_classes; ++k) grow[k] += v * p[k] * inv_n;
    }
  }
  for (std::size_t j = 0; j < m.w.size(); ++j) gw[j] += l2 * m.w[j];
}

// Full-batch proximal gradient descent from a zero start: the cross-entropy
// term is stepped along its gradient under a backtracked quadratic upper
// bound, and the L2 penalty is applied in closed form as shrinkage of the
// weight update. The recorded full-objective trace is non-increasing by
// construction, and the limit of large l2 collapses the weights while the
// biases still fit the class priors. A training set with a single
// represented class yields a degenerate model that always predicts it.
inline MultinomialLogReg logreg_fit(const std::vector<SparseRow>& rows,
                                    const std::vector<int>& labels, int num_classes, int dim,
                                    const LogRegConfig& cfg = {}) {
  if (rows.empty()) throw std::invalid_argument("logreg_fit: empty training set");
  if (rows.size() != labels.size()) throw std::invalid_argument("logreg_fit: length mismatch");
  for (int l : labels) {
    if (l < 0 || l >= num_classes) throw std::invalid_argument("logreg_fit: label out of range");
  }

  MultinomialLogReg m;
  m.num_classes = num_classes;
  m.dim = dim;
  m.w.assign(static_cast<std::size_t>(dim) * num_classes, 0.0);
  m.b.assign(num_classes, 0.0);

  std::vector<double> gw, gb;
  double data_loss = logreg_loss(m, rows, labels, 0.0);
  double full_loss = data_loss;  // zero weights carry no penalty
  m.loss_trace.push_back(full_loss);
  double step = cfg.initial_step;

  for (int epoch = 0; epoch < cfg.max_epochs; ++epoch) {
    logreg_gradient(m, rows, labels, 0.0, gw, gb);

    step = std::min(step * 2.0, 1e4);
    MultinomialLogReg trial = m;
    bool accepted = false;
    double trial_data = 0.0;
    while (step > 1e-16) {
      const double shrink = 1.0 + step * cfg.l2;
      for (std::size_t j = 0; j < m.w.size(); ++j) {
        trial.w[j] = (m.w[j] - step * gw[j]) / shrink;
      }
      for (std::size_t j = 0; j < m.b.size(); ++j) trial.b[j] = m.b[j] - step * gb[j];

      trial_data = logreg_loss(trial, rows, labels, 0.0);
      double lin = 0.0, dist2 = 0.0;
      for (std::size_t j = 0; j < m.w.size(); ++j) {
        const double d = trial.w[j] - m.w[j];
        lin += gw[j] * d;
        dist2 += d * d;
      }
      for (std::size_t j = 0; j < m.b.size(); ++j) {
        const double d = trial.b[j] - m.b[j];
        lin += gb[j] * d;
        dist2 += d * d;
      }
      if (dist2 == 0.0) return m;  // prox step is a fixed point
      if (trial_data <= data_loss + lin + dist2 / (2.0 * step) + 1e-12) {
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    if (!accepted) break;

    double reg = 0.0;
    for (double w : trial.w) reg += w * w;
    const double new_full = trial_data + 0.5 * cfg.l2 * reg;
    if (new_full > full_loss) break;  // converged up to rounding
    m.w.swap(trial.w);
    m.b.swap(trial.b);
    data_loss = trial_data;
    const double improvement = full_loss - new_full;
    full_loss = new_full;
    m.loss_trace.push_back(full_loss);
    if (improvement < cfg.tol) break;
  }
  return m;
}

inline std::vector<double> logreg_predict_proba(const MultinomialLogReg& m, const SparseRow& row) {
  std::vector<double> p;
  detail::logreg_scores(m, row, p);
  detail::softmax_inplace(p);
  return p;
}

// Argmax label; ties go to the lower class index.
inline int logreg_predict(const MultinomialLogReg& m, const SparseRow& row) {
  std::vector<double> scores;
  detail::logreg_scores(m, row, scores);
  int best = 0;
  for (int k = 1; k < m.num_classes; ++k) {
    if (scores[k] > scores[best]) best = k;
  }
  return best;
}

inline std::vector<int> logreg_predict(const MultinomialLogReg& m,
                                       const std::vector<SparseRow>& rows) {
  std::vector<int> out(rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) out[i] = logreg_predict(m, rows[i]);
  return out;
}

}  // namespace stck
