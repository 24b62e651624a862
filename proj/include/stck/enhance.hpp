#pragma once

// Clustering enhancement by iterative classification: per-cluster outlier
// removal, cluster-size capping, classifier training on the survivors,
// reclassification of the removed texts, and a stability-based stop.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "stck/clustering.hpp"
#include "stck/learners.hpp"
#include "stck/rng.hpp"
#include "stck/vectorize.hpp"

namespace stck {

struct EnhanceConfig {
  double p1 = 0.5;
  double p2 = 0.95;
  std::optional<double> fixed_p;  // fixed-P mode: same training fraction every iteration
  int max_iteration = 50;
  double stability_fraction = 0.05;
  std::uint64_t seed = 0;
  IsolationForestConfig iforest;
  LogRegConfig logreg;

  void validate() const {
    if (!(p1 > 0.0 && p1 <= p2 && p2 <= 1.0)) {
      throw std::invalid_argument("enhance: need 0 < P1 <= P2 <= 1");
    }
    if (fixed_p && !(*fixed_p > 0.0 && *fixed_p <= 1.0)) {
      throw std::invalid_argument("enhance: fixed P must be in (0, 1]");
    }
    if (max_iteration < 1) throw std::invalid_argument("enhance: max_iteration must be >= 1");
  }
};

struct IterationRecord {
  int iteration = 0;  // 1-based
  double p = 0.0;
  std::vector<int> outliers_per_cluster;
  int train_size = 0;
  int test_size = 0;
  std::vector<int> cluster_sizes;  // after reclassification
  double stability_stat = 0.0;
  bool stable = false;
};

struct IterationTrace {
  std::vector<IterationRecord> records;
};

struct SplitResult {
  std::vector<int> train_ids;
  std::vector<int> train_labels;
  std::vector<int> test_ids;
  std::vector<int> outliers_per_cluster;
};

// Mean absolute per-cluster size change, stable when it is at most
// fraction * n / k.
inline bool stability_check(const std::vector<int>& prev_sizes, const std::vector<int>& new_sizes,
                            int n, int k, double fraction = 0.05,
                            double* stat_out = nullptr) {
  if (prev_sizes.size() != new_sizes.size()) {
    throw std::invalid_argument("stability_check: size vectors differ in length");
  }
  double change = 0.0;
  for (std::size_t i = 0; i < prev_sizes.size(); ++i) {
    change += std::abs(prev_sizes[i] - new_sizes[i]);
  }
  const double stat = change / static_cast<double>(k);
  if (stat_out) *stat_out = stat;
  return stat <= fraction * static_cast<double>(n) / static_cast<double>(k);
}

// Splits the corpus into training and test ids for one iteration: per
// cluster, Isolation Forest outliers go to the test set, then the cluster is
// down-sampled uniformly at random so at most floor((n/K) * P) texts stay in
// training. A cluster whose members are all flagged keeps its least
// anomalous one. The two sets partition [0, n).
inline SplitResult split_train_test(const DocTermMatrix& tfidf, const Clustering& clustering,
                                    double p, Rng& rng, const EnhanceConfig& cfg = {}) {
  const int n = tfidf.n;
  const int k = clustering.k;
  const auto cap = static_cast<long long>(
      std::floor(static_cast<double>(n) / static_cast<double>(k) * p));

  std::vector<std::vector<int>> by_cluster(k);
  for (int i = 0; i < n; ++i) {
    const int label = clustering.labels[i];
    if (label < 0 || label >= k) {
      throw std::invalid_argument("split_train_test: label out of range at document " +
                                  std::to_string(i));
    }
    by_cluster[label].push_back(i);
  }

  SplitResult split;
  split.outliers_per_cluster.assign(k, 0);
  for (int c = 0; c < k; ++c) {
    const auto& ids = by_cluster[c];
    // Child seed is drawn up front so per-cluster detection could run in any
    // order without changing the result.
    Rng forest_rng(rng.next_u64());

    std::vector<char> flagged(ids.size(), 0);
    if (ids.size() >= 2) {
      const auto proj = dense_projection(tfidf, ids);
      const auto forest = iforest_fit(proj.rows, cfg.iforest, forest_rng);
      const auto scores = iforest_scores(forest, proj.rows);
      std::size_t flagged_count = 0;
      for (std::size_t i = 0; i < ids.size(); ++i) {
        if (scores[i] > cfg.iforest.score_threshold) {
          flagged[i] = 1;
          ++flagged_count;
        }
      }
      if (flagged_count == ids.size()) {
        std::size_t keep = 0;
        for (std::size_t i = 1; i < ids.size(); ++i) {
          if (scores[i] < scores[keep]) keep = i;
        }
        flagged[keep] = 0;
        --flagged_count;
      }
    }

    std::vector<int> survivors;
    for (std::size_t i = 0; i < ids.size(); ++i) {
      if (flagged[i]) {
        split.test_ids.push_back(ids[i]);
        ++split.outliers_per_cluster[c];
      } else {
        survivors.push_back(ids[i]);
      }
    }

    if (static_cast<long long>(survivors.size()) > cap) {
      for (std::size_t i = 0; i + 1 < survivors.size(); ++i) {
        const auto j = i + rng.uniform_index(survivors.size() - i);
        std::swap(survivors[i], survivors[j]);
      }
      for (std::size_t i = static_cast<std::size_t>(cap); i < survivors.size(); ++i) {
        split.test_ids.push_back(survivors[i]);
      }
      survivors.resize(static_cast<std::size_t>(cap));
    }
    for (int id : survivors) {
      split.train_ids.push_back(id);
      split.train_labels.push_back(c);
    }
  }

  std::sort(split.test_ids.begin(), split.test_ids.end());
  // train ids are already grouped by ascending cluster; sort pairs by id for
  // order-independent downstream numerics
  std::vector<std::pair<int, int>> pairs(split.train_ids.size());
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    pairs[i] = {split.train_ids[i], split.train_labels[i]};
  }
  std::sort(pairs.begin(), pairs.end());
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    split.train_ids[i] = pairs[i].first;
    split.train_labels[i] = pairs[i].second;
  }
  return split;
}

namespace detail {

struct IterationOutcome {
  Clustering clustering;
  std::vector<int> outliers_per_cluster;
  int train_size = 0;
  int test_size = 0;
};

inline IterationOutcome run_iteration(const DocTermMatrix& tfidf, const Clustering& clustering,
                                      double p, Rng& rng, const EnhanceConfig& cfg) {
  const auto split = split_train_test(tfidf, clustering, p, rng, cfg);

  IterationOutcome out;
  out.clustering = clustering;
  out.outliers_per_cluster = split.outliers_per_cluster;
  out.train_size = static_cast<int>(split.train_ids.size());
  out.test_size = static_cast<int>(split.test_ids.size());
  if (split.test_ids.empty()) return out;

  std::vector<SparseRow> train_rows;
  train_rows.reserve(split.train_ids.size());
  for (int id : split.train_ids) train_rows.push_back(tfidf.rows[id]);
  const auto model =
      logreg_fit(train_rows, split.train_labels, clustering.k, tfidf.vocab_size, cfg.logreg);
  for (int id : split.test_ids) {
    out.clustering.labels[id] = logreg_predict(model, tfidf.rows[id]);
  }
  return out;
}

}  // namespace detail

// One classification pass: training labels are kept, every test text gets
// the predicted label.
inline Clustering enhance_iteration(const DocTermMatrix& tfidf, const Clustering& clustering,
                                    double p, Rng& rng, const EnhanceConfig& cfg = {}) {
  return detail::run_iteration(tfidf, clustering, p, rng, cfg).clustering;
}

// The full enhancement loop: each iteration draws P uniformly from
// [P1, P2] (or uses the fixed P), reassigns the removed texts, and stops
// once the per-cluster size distribution is stable or max_iteration is
// reached.
inline std::pair<Clustering, IterationTrace> iterative_classification(
    const DocTermMatrix& tfidf, const Clustering& initial, const EnhanceConfig& cfg) {
  cfg.validate();
  if (initial.n() != tfidf.n) {
    throw std::invalid_argument("iterative_classification: labels/corpus size mismatch");
  }

  Rng rng(cfg.seed);
  Clustering current = initial;
  IterationTrace trace;

  for (int iter = 1; iter <= cfg.max_iteration; ++iter) {
    const double p = cfg.fixed_p ? *cfg.fixed_p : rng.uniform(cfg.p1, cfg.p2);
    const auto prev_sizes = cluster_sizes(current);
    auto outcome = detail::run_iteration(tfidf, current, p, rng, cfg);
    const auto new_sizes = cluster_sizes(outcome.clustering);

    IterationRecord rec;
    rec.iteration = iter;
    rec.p = p;
    rec.outliers_per_cluster = std::move(outcome.outliers_per_cluster);
    rec.train_size = outcome.train_size;
    rec.test_size = outcome.test_size;
    rec.cluster_sizes = new_sizes;
    rec.stable = stability_check(prev_sizes, new_sizes, tfidf.n, current.k,
                                 cfg.stability_fraction, &rec.stability_stat);
    trace.records.push_back(rec);

    current = std::move(outcome.clustering);
    if (rec.stable) break;
  }
  return {std::move(current), std::move(trace)};
}

inline void save_trace_csv(const IterationTrace& trace, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write trace file: " + path);
  out << "iteration,P,train_size,test_size,stability_stat,stable_flag\n";
  char buf[128];
  for (const auto& r : trace.records) {
    std::snprintf(buf, sizeof(buf), "%d,%.6f,%d,%d,%.6f,%d\n", r.iteration, r.p, r.train_size,
                  r.test_size, r.stability_stat, r.stable ? 1 : 0);
    out << buf;
  }
}

}  // namespace stck
