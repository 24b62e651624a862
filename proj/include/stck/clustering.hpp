#pragma once

// Initial clusterers: k-means with k-means++ seeding, k-means-- (outlier
// trimmed center updates), and Ward-linkage agglomerative clustering over
// dense or sparse similarity matrices.

#include <algorithm>
#include <fstream>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

#include "stck/matrix.hpp"
#include "stck/rng.hpp"
#include "stck/similarity.hpp"

namespace stck {

struct Clustering {
  int k = 0;
  std::vector<int> labels;
  int n() const { return static_cast<int>(labels.size()); }
};

inline std::vector<int> cluster_sizes(const Clustering& c) {
  std::vector<int> sizes(c.k, 0);
  for (int l : c.labels) ++sizes[l];
  return sizes;
}

struct KMeansConfig {
  int k = 2;
  int max_iters = 100;
  std::uint64_t seed = 0;
};

struct KmmConfig {
  KMeansConfig base;
  int outliers_per_iter = 0;  // d: points excluded from center recomputation
};

namespace detail {

// k-means++: first center uniform, each next sampled with probability
// proportional to the squared distance to the nearest chosen center. When
// all remaining squared distances are zero the next center is drawn
// uniformly among unchosen points.
inline std::vector<int> kmeans_pp_indices(const DenseMatrix& x, int k, Rng& rng) {
  const int n = x.rows;
  if (k < 1 || k > n) {
    throw std::invalid_argument("kmeans++: K must be in [1, n], got " + std::to_string(k));
  }
  std::vector<int> chosen;
  std::vector<char> is_chosen(n, 0);
  std::vector<double> d2(n, std::numeric_limits<double>::infinity());

  int first = static_cast<int>(rng.uniform_index(n));
  chosen.push_back(first);
  is_chosen[first] = 1;
  for (int i = 0; i < n; ++i) d2[i] = squared_distance(x.row(i), x.row(first));

  while (static_cast<int>(chosen.size()) < k) {
    double total = 0.0;
    for (int i = 0; i < n; ++i) {
      if (!is_chosen[i]) total += d2[i];
    }
    int next = -1;
    if (total > 0.0) {
      const double u = rng.uniform() * total;
      double cum = 0.0;
      for (int i = 0; i < n; ++i) {
        if (is_chosen[i] || d2[i] == 0.0) continue;
        cum += d2[i];
        if (cum > u) {
          next = i;
          break;
        }
        next = i;  // fall-through guard against rounding at the top end
      }
    } else {
      std::uint64_t pos = rng.uniform_index(n - chosen.size());
      for (int i = 0; i < n; ++i) {
        if (is_chosen[i]) continue;
        if (pos == 0) {
          next = i;
          break;
        }
        --pos;
      }
    }
    chosen.push_back(next);
    is_chosen[next] = 1;
    for (int i = 0; i < n; ++i) {
      d2[i] = std::min(d2[i], squared_distance(x.row(i), x.row(next)));
    }
  }
  return chosen;
}

}  // namespace detail

inline DenseMatrix kmeans_pp_seed(const DenseMatrix& x, int k, Rng& rng) {
  const auto idx = detail::kmeans_pp_indices(x, k, rng);
  DenseMatrix centers(k, x.cols);
  for (int c = 0; c < k; ++c) {
    auto src = x.row(idx[c]);
    auto dst = centers.row(c);
    std::copy(src.begin(), src.end(), dst.begin());
  }
  return centers;
}

struct KMeansResult {
  Clustering clustering;
  DenseMatrix centers;
  std::vector<double> objective;  // sum of squared distances, one entry per iteration
  int iterations = 0;
  bool converged = false;
};

namespace detail {

// Lloyd iterations shared by k-means (d = 0) and k-means-- (d > 0).
// One iteration: assign to nearest center (ties to the lower center index),
// re-seed empty clusters with the point farthest from its center, record the
// objective, stop on label stability, exclude the d most center-distant
// points, recompute centers as means of the remaining members.
inline KMeansResult lloyd(const DenseMatrix& x, const KMeansConfig& cfg, int exclude_d) {
  const int n = x.rows;
  const int k = cfg.k;
  if (k < 1 || k > n - exclude_d) {
    throw std::invalid_argument("kmeans: need K <= n - d, got K=" + std::to_string(k) +
                                " n=" + std::to_string(n) + " d=" + std::to_string(exclude_d));
  }
  if (cfg.max_iters < 1) throw std::invalid_argument("kmeans: max_iters must be >= 1");

  Rng rng(cfg.seed);
  DenseMatrix centers = kmeans_pp_seed(x, k, rng);

  KMeansResult res;
  std::vector<int> labels(n, -1), prev(n, -2);
  std::vector<double> dist2(n, 0.0);
  std::vector<char> repaired(n, 0);

  for (int iter = 0; iter < cfg.max_iters; ++iter) {
    for (int i = 0; i < n; ++i) {
      int best = 0;
      double best_d = squared_distance(x.row(i), centers.row(0));
      for (int c = 1; c < k; ++c) {
        const double d = squared_distance(x.row(i), centers.row(c));
        if (d < best_d) {
          best_d = d;
          best = c;
        }
      }
      labels[i] = best;
      dist2[i] = best_d;
    }

    // Re-seed empty clusters until none remain; a moved point stays put for
    // the rest of this pass so the loop terminates.
    std::fill(repaired.begin(), repaired.end(), 0);
    for (;;) {
      std::vector<int> count(k, 0);
      for (int l : labels) ++count[l];
      int empty = -1;
      for (int c = 0; c < k; ++c) {
        if (count[c] == 0) {
          empty = c;
          break;
        }
      }
      if (empty < 0) break;
      int far = -1;
      for (int i = 0; i < n; ++i) {
        if (repaired[i]) continue;
        if (far < 0 || dist2[i] > dist2[far]) far = i;
      }
      labels[far] = empty;
      repaired[far] = 1;
      auto src = x.row(far);
      auto dst = centers.row(empty);
      std::copy(src.begin(), src.end(), dst.begin());
      dist2[far] = 0.0;
    }

    double obj = 0.0;
    for (int i = 0; i < n; ++i) obj += dist2[i];
    res.objective.push_back(obj);
    res.iterations = iter + 1;

    if (labels == prev) {
      res.converged = true;
      break;
    }
    prev = labels;

    std::vector<char> excluded(n, 0);
    if (exclude_d > 0) {
      std::vector<int> order(n);
      std::iota(order.begin(), order.end(), 0);
      std::sort(order.begin(), order.end(), [&](int a, int b) {
        if (dist2[a] != dist2[b]) return dist2[a] > dist2[b];
        return a < b;
      });
      for (int r = 0; r < exclude_d; ++r) excluded[order[r]] = 1;
    }

    for (int c = 0; c < k; ++c) {
      auto center = centers.row(c);
      std::vector<double> sum(x.cols, 0.0);
      int count = 0;
      for (int i = 0; i < n; ++i) {
        if (labels[i] != c || excluded[i]) continue;
        auto row = x.row(i);
        for (int j = 0; j < x.cols; ++j) sum[j] += row[j];
        ++count;
      }
      if (count > 0) {
        for (int j = 0; j < x.cols; ++j) center[j] = sum[j] / count;
      }
      // a cluster whose members were all excluded keeps its previous center
    }
  }

  res.clustering.k = k;
  res.clustering.labels = std::move(labels);
  res.centers = std::move(centers);
  return res;
}

}  // namespace detail

inline KMeansResult kmeans(const DenseMatrix& x, const KMeansConfig& cfg) {
  return detail::lloyd(x, cfg, 0);
}

inline KMeansResult kmeans_minus_minus(const DenseMatrix& x, const KmmConfig& cfg) {
  if (cfg.outliers_per_iter < 0 || cfg.outliers_per_iter >= std::max(x.rows, 1)) {
    throw std::invalid_argument("kmeans--: d must be in [0, n)");
  }
  return detail::lloyd(x, cfg.base, cfg.outliers_per_iter);
}

struct WardMerge {
  int id_a = 0;  // cluster ids: 0..n-1 are singletons, n+t is the merge at step t
  int id_b = 0;
  double cost = 0.0;
};

struct HacResult {
  Clustering clustering;
  std::vector<WardMerge> merges;
};

namespace detail {

// Agglomerative clustering with Ward's criterion via the Lance-Williams
// recurrence on squared-distance semantics. Merge ties are broken toward
// the smallest (id, id) pair. dist holds pairwise squared distances.
inline HacResult hac_ward_on_distances(std::vector<double> dist, int n, int k) {
  if (k < 1 || k > n) {
    throw std::invalid_argument("hac_ward: K must be in [1, n], got " + std::to_string(k));
  }
  auto d = [&](int a, int b) -> double& { return dist[static_cast<std::size_t>(a) * n + b]; };

  std::vector<char> active(n, 1);
  std::vector<int> id(n), size(n, 1);
  std::iota(id.begin(), id.end(), 0);
  std::vector<std::vector<int>> members(n);
  for (int i = 0; i < n; ++i) members[i] = {i};

  HacResult res;
  int clusters = n;
  int step = 0;
  while (clusters > k) {
    int best_a = -1, best_b = -1;
    double best = std::numeric_limits<double>::infinity();
    for (int a = 0; a < n; ++a) {
      if (!active[a]) continue;
      for (int b = a + 1; b < n; ++b) {
        if (!active[b]) continue;
        const double c = d(a, b);
        if (c < best) {
          best = c;
          best_a = a;
          best_b = b;
        } else if (c == best) {
          const int lo = std::min(id[a], id[b]), hi = std::max(id[a], id[b]);
          const int blo = std::min(id[best_a], id[best_b]), bhi = std::max(id[best_a], id[best_b]);
          if (lo < blo || (lo == blo && hi < bhi)) {
            best_a = a;
            best_b = b;
          }
        }
      }
    }

    res.merges.push_back({std::min(id[best_a], id[best_b]), std::max(id[best_a], id[best_b]), best});
    const double na = size[best_a], nb = size[best_b];
    for (int c = 0; c < n; ++c) {
      if (!active[c] || c == best_a || c == best_b) continue;
      const double nc = size[c];
      const double v = ((na + nc) * d(best_a, c) + (nb + nc) * d(best_b, c) - nc * d(best_a, best_b)) /
                       (na + nb + nc);
      d(best_a, c) = v;
      d(c, best_a) = v;
    }
    active[best_b] = 0;
    size[best_a] += size[best_b];
    id[best_a] = n + step;
    members[best_a].insert(members[best_a].end(), members[best_b].begin(), members[best_b].end());
    members[best_b].clear();
    --clusters;
    ++step;
  }

  // Label clusters by first occurrence over point indices.
  std::vector<int> point_slot(n, -1);
  for (int a = 0; a < n; ++a) {
    if (!active[a]) continue;
    for (int p : members[a]) point_slot[p] = a;
  }
  std::vector<int> slot_label(n, -1);
  res.clustering.k = k;
  res.clustering.labels.assign(n, -1);
  int next_label = 0;
  for (int p = 0; p < n; ++p) {
    const int slot = point_slot[p];
    if (slot_label[slot] < 0) slot_label[slot] = next_label++;
    res.clustering.labels[p] = slot_label[slot];
  }
  return res;
}

}  // namespace detail

// Similarity to distance: delta = 1 - s, squared-distance semantics.
inline HacResult hac_ward(const SimMatrix& s, int k) {
  std::vector<double> dist(static_cast<std::size_t>(s.n) * s.n, 0.0);
  for (int i = 0; i < s.n; ++i) {
    for (int j = 0; j < s.n; ++j) {
      if (i != j) dist[static_cast<std::size_t>(i) * s.n + j] = 1.0 - s.at(i, j);
    }
  }
  return detail::hac_ward_on_distances(std::move(dist), s.n, k);
}

// Sparse input: dropped entries mean "no association" and map to the
// maximum distance 1 exactly.
inline HacResult hac_ward(const SparseSimMatrix& m, int k) {
  std::vector<double> dist(static_cast<std::size_t>(m.n) * m.n, 1.0);
  for (int i = 0; i < m.n; ++i) {
    dist[static_cast<std::size_t>(i) * m.n + i] = 0.0;
    for (const auto& [j, v] : m.rows[i]) dist[static_cast<std::size_t>(i) * m.n + j] = 1.0 - v;
  }
  return detail::hac_ward_on_distances(std::move(dist), m.n, k);
}

inline void save_labels(const std::vector<int>& labels, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write labels file: " + path);
  for (int l : labels) out << l << '\n';
}

inline std::vector<int> load_labels(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open labels file: " + path);
  std::vector<int> labels;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    try {
      labels.push_back(std::stoi(line));
    } catch (const std::exception&) {
      throw std::runtime_error(path + " line " + std::to_string(line_no) + ": not an integer");
    }
  }
  return labels;
}

}  // namespace stck
