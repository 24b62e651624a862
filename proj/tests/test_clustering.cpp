#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "stck/clustering.hpp"
#include "stck/evaluate.hpp"
#include "test_util.hpp"

using namespace stck;

namespace {

// From-scratch Ward reference: cluster-to-cluster merge costs are recomputed
// each step from the pairwise squared distances via the centroid identity,
// with the same tie rule as the implementation (smallest id pair).
struct WardOracle {
  int n;
  std::vector<double> d;  // squared distances
  std::vector<std::vector<int>> members;
  std::vector<int> ids;
  std::vector<WardMerge> merges;

  explicit WardOracle(const std::vector<double>& dist, int n_) : n(n_), d(dist) {
    for (int i = 0; i < n; ++i) {
      members.push_back({i});
      ids.push_back(i);
    }
  }

  double dist_at(int a, int b) const { return d[static_cast<std::size_t>(a) * n + b]; }

  double pair_sum(const std::vector<int>& a, const std::vector<int>& b) const {
    double s = 0.0;
    for (int x : a) {
      for (int y : b) s += dist_at(x, y);
    }
    return s;
  }

  double merge_cost(const std::vector<int>& a, const std::vector<int>& b) const {
    const double na = static_cast<double>(a.size());
    const double nb = static_cast<double>(b.size());
    const double centroid_gap =
        pair_sum(a, b) / (na * nb) - pair_sum(a, a) / (2.0 * na * na) -
        pair_sum(b, b) / (2.0 * nb * nb);
    return 2.0 * (na * nb / (na + nb)) * centroid_gap;
  }

  void run(int k) {
    int step = 0;
    while (static_cast<int>(members.size()) > k) {
      int best_a = -1, best_b = -1;
      double best = std::numeric_limits<double>::infinity();
      for (std::size_t a = 0; a < members.size(); ++a) {
        for (std::size_t b = a + 1; b < members.size(); ++b) {
          const double c = merge_cost(members[a], members[b]);
          const int lo = std::min(ids[a], ids[b]), hi = std::max(ids[a], ids[b]);
          bool take = false;
          if (c < best) {
            take = true;
          } else if (c == best) {
            const int blo = std::min(ids[best_a], ids[best_b]);
            const int bhi = std::max(ids[best_a], ids[best_b]);
            take = lo < blo || (lo == blo && hi < bhi);
          }
          if (take) {
            best = c;
            best_a = static_cast<int>(a);
            best_b = static_cast<int>(b);
          }
        }
      }
      merges.push_back({std::min(ids[best_a], ids[best_b]), std::max(ids[best_a], ids[best_b]), best});
      members[best_a].insert(members[best_a].end(), members[best_b].begin(), members[best_b].end());
      ids[best_a] = n + step;
      members.erase(members.begin() + best_b);
      ids.erase(ids.begin() + best_b);
      ++step;
    }
  }
};

std::vector<double> distances_from(const SimMatrix& s) {
  std::vector<double> d(static_cast<std::size_t>(s.n) * s.n, 0.0);
  for (int i = 0; i < s.n; ++i) {
    for (int j = 0; j < s.n; ++j) {
      if (i != j) d[static_cast<std::size_t>(i) * s.n + j] = 1.0 - s.at(i, j);
    }
  }
  return d;
}

DenseMatrix two_blobs(int per_blob, stck::Rng& rng, double spread = 0.1) {
  DenseMatrix x(2 * per_blob, 2);
  for (int i = 0; i < per_blob; ++i) {
    x.at(i, 0) = spread * rng.normal();
    x.at(i, 1) = spread * rng.normal();
    x.at(per_blob + i, 0) = 10.0 + spread * rng.normal();
    x.at(per_blob + i, 1) = 10.0 + spread * rng.normal();
  }
  return x;
}

}  // namespace

TEST_CASE("kmeans recovers two separated blobs") {
  stck::Rng rng(31);
  const auto x = two_blobs(10, rng);
  std::vector<int> gold(20, 0);
  std::fill(gold.begin() + 10, gold.end(), 1);
  const auto res = kmeans(x, {2, 100, 5});
  REQUIRE(accuracy(res.clustering.labels, gold) == 1.0);
  REQUIRE(res.converged);
}

TEST_CASE("kmeans with K=1 returns the mean as center") {
  DenseMatrix x(4, 1);
  x.at(0, 0) = 1;
  x.at(1, 0) = 2;
  x.at(2, 0) = 3;
  x.at(3, 0) = 6;
  const auto res = kmeans(x, {1, 100, 0});
  REQUIRE(res.clustering.labels == std::vector<int>{0, 0, 0, 0});
  REQUIRE(res.centers.at(0, 0) == Catch::Approx(3.0));
}

TEST_CASE("kmeans objective is non-increasing") {
  stck::Rng rng(32);
  for (int trial = 0; trial < 10; ++trial) {
    const auto x = testutil::random_dense(30, 3, rng);
    const auto res = kmeans(x, {4, 100, static_cast<std::uint64_t>(trial)});
    for (std::size_t i = 1; i < res.objective.size(); ++i) {
      REQUIRE(res.objective[i] <= res.objective[i - 1] + 1e-12);
    }
  }
}

TEST_CASE("kmeans is deterministic for a fixed seed") {
  stck::Rng rng(33);
  const auto x = testutil::random_dense(40, 4, rng);
  const auto a = kmeans(x, {3, 100, 77});
  const auto b = kmeans(x, {3, 100, 77});
  REQUIRE(a.clustering.labels == b.clustering.labels);
  REQUIRE(a.centers.data == b.centers.data);
  REQUIRE(a.objective == b.objective);
}

TEST_CASE("kmeans++ with K=n picks every point") {
  stck::Rng data_rng(34);
  const auto x = testutil::random_dense(6, 2, data_rng);
  stck::Rng rng(1);
  auto idx = detail::kmeans_pp_indices(x, 6, rng);
  std::sort(idx.begin(), idx.end());
  REQUIRE(idx == std::vector<int>{0, 1, 2, 3, 4, 5});
}

TEST_CASE("kmeans++ picks distinct indices among duplicate points") {
  DenseMatrix x(5, 2);  // all-zero rows
  stck::Rng rng(2);
  auto idx = detail::kmeans_pp_indices(x, 3, rng);
  std::sort(idx.begin(), idx.end());
  REQUIRE(std::adjacent_find(idx.begin(), idx.end()) == idx.end());
}

TEST_CASE("kmeans++ separates two far point pairs almost always") {
  DenseMatrix x(4, 2);
  x.at(0, 0) = 0.0;
  x.at(1, 0) = 0.1;
  x.at(2, 0) = 10.0; x.at(2, 1) = 10.0;
  x.at(3, 0) = 10.1; x.at(3, 1) = 10.0;
  int split = 0;
  for (int seed = 0; seed < 1000; ++seed) {
    stck::Rng rng(seed);
    const auto idx = detail::kmeans_pp_indices(x, 2, rng);
    const bool a_low = idx[0] < 2;
    const bool b_low = idx[1] < 2;
    if (a_low != b_low) ++split;
  }
  REQUIRE(split >= 990);
}

TEST_CASE("kmeans++ rejects K > n") {
  DenseMatrix x(3, 1);
  stck::Rng rng(0);
  REQUIRE_THROWS_AS(detail::kmeans_pp_indices(x, 4, rng), std::invalid_argument);
}

TEST_CASE("kmeans-- with d=0 is bit-identical to kmeans") {
  stck::Rng rng(35);
  const auto x = testutil::random_dense(50, 3, rng);
  const auto km = kmeans(x, {4, 100, 9});
  KmmConfig cfg;
  cfg.base = {4, 100, 9};
  cfg.outliers_per_iter = 0;
  const auto kmm = kmeans_minus_minus(x, cfg);
  REQUIRE(km.clustering.labels == kmm.clustering.labels);
  REQUIRE(km.centers.data == kmm.centers.data);
  REQUIRE(km.objective == kmm.objective);
}

TEST_CASE("kmeans-- excludes the far outlier from center recomputation") {
  DenseMatrix x(7, 2);
  x.at(0, 0) = 0.0;  x.at(0, 1) = 0.0;
  x.at(1, 0) = 0.2;  x.at(1, 1) = 0.0;
  x.at(2, 0) = 0.1;  x.at(2, 1) = 0.1;
  x.at(3, 0) = 5.0;  x.at(3, 1) = 5.0;
  x.at(4, 0) = 5.2;  x.at(4, 1) = 5.0;
  x.at(5, 0) = 5.1;  x.at(5, 1) = 5.1;
  x.at(6, 0) = 100.0; x.at(6, 1) = 100.0;  // outlier

  // pick a seed whose k-means++ centers both land inside the blobs
  std::uint64_t seed = 0;
  bool found = false;
  for (std::uint64_t s = 0; s < 200 && !found; ++s) {
    stck::Rng rng(s);
    const auto idx = detail::kmeans_pp_indices(x, 2, rng);
    if (idx[0] != 6 && idx[1] != 6 && (idx[0] < 3) != (idx[1] < 3)) {
      seed = s;
      found = true;
    }
  }
  REQUIRE(found);

  KmmConfig cfg;
  cfg.base = {2, 100, seed};
  cfg.outliers_per_iter = 1;
  const auto res = kmeans_minus_minus(x, cfg);

  const int blob_a = res.clustering.labels[0];
  const int blob_b = res.clustering.labels[3];
  REQUIRE(blob_a != blob_b);
  REQUIRE(res.clustering.labels[6] == blob_b);  // outlier keeps its nearest-center label
  REQUIRE(res.centers.at(blob_a, 0) == Catch::Approx(0.1));
  REQUIRE(res.centers.at(blob_a, 1) == Catch::Approx(0.1 / 3.0));
  REQUIRE(res.centers.at(blob_b, 0) == Catch::Approx(5.1));  // outlier excluded from the mean
  REQUIRE(res.centers.at(blob_b, 1) == Catch::Approx(15.1 / 3.0));
}

TEST_CASE("kmeans-- survives d = n - K") {
  stck::Rng rng(36);
  const auto x = testutil::random_dense(6, 2, rng);
  KmmConfig cfg;
  cfg.base = {2, 50, 4};
  cfg.outliers_per_iter = 4;
  const auto res = kmeans_minus_minus(x, cfg);
  REQUIRE(res.clustering.n() == 6);
  for (int l : res.clustering.labels) {
    REQUIRE(l >= 0);
    REQUIRE(l < 2);
  }
}

TEST_CASE("kmeans-- rejects K > n - d") {
  stck::Rng rng(37);
  const auto x = testutil::random_dense(5, 2, rng);
  KmmConfig cfg;
  cfg.base = {3, 50, 0};
  cfg.outliers_per_iter = 3;
  REQUIRE_THROWS_AS(kmeans_minus_minus(x, cfg), std::invalid_argument);
}

TEST_CASE("hac recovers two tight pairs") {
  SimMatrix s(4);
  const auto set = [&](int i, int j, double v) { s.at(i, j) = s.at(j, i) = v; };
  set(0, 1, 0.99);
  set(2, 3, 0.99);
  set(0, 2, 0.01);
  set(0, 3, 0.01);
  set(1, 2, 0.01);
  set(1, 3, 0.01);
  const auto res = hac_ward(s, 2);
  REQUIRE(res.clustering.labels == std::vector<int>{0, 0, 1, 1});
}

TEST_CASE("hac with K=n is the identity partition") {
  stck::Rng rng(38);
  const auto s = testutil::random_sim_matrix(5, rng);
  const auto res = hac_ward(s, 5);
  REQUIRE(res.clustering.labels == std::vector<int>{0, 1, 2, 3, 4});
  REQUIRE(res.merges.empty());
}

TEST_CASE("hac merge sequence matches the from-scratch oracle") {
  stck::Rng rng(39);
  for (int trial = 0; trial < 25; ++trial) {
    const int n = 4 + static_cast<int>(rng.uniform_index(5));
    const auto s = testutil::random_sim_matrix(n, rng);
    const auto res = hac_ward(s, 1);
    WardOracle oracle(distances_from(s), n);
    oracle.run(1);
    REQUIRE(res.merges.size() == oracle.merges.size());
    for (std::size_t m = 0; m < res.merges.size(); ++m) {
      REQUIRE(res.merges[m].id_a == oracle.merges[m].id_a);
      REQUIRE(res.merges[m].id_b == oracle.merges[m].id_b);
      REQUIRE(res.merges[m].cost == Catch::Approx(oracle.merges[m].cost).margin(1e-9));
    }
  }
}

TEST_CASE("hac is invariant under input permutation") {
  stck::Rng rng(40);
  const int n = 12;
  const auto s = testutil::random_sim_matrix(n, rng);
  std::vector<int> perm(n);
  std::iota(perm.begin(), perm.end(), 0);
  for (int i = n - 1; i > 0; --i) {
    std::swap(perm[i], perm[rng.uniform_index(i + 1)]);
  }
  SimMatrix sp(n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) sp.at(perm[i], perm[j]) = s.at(i, j);
  }
  const auto base = hac_ward(s, 3).clustering;
  const auto permuted = hac_ward(sp, 3).clustering;
  std::vector<int> mapped(n);
  for (int i = 0; i < n; ++i) mapped[i] = permuted.labels[perm[i]];
  REQUIRE(accuracy(mapped, base.labels) == 1.0);
}

TEST_CASE("hac on a sparse matrix treats dropped entries as distance 1") {
  stck::Rng rng(41);
  const auto s = testutil::random_sim_matrix(9, rng);
  const auto sparse = sparsify_sd(s, 3);

  // densified counterpart: dropped entries became similarity 0
  SimMatrix dense(9);
  for (int i = 0; i < 9; ++i) {
    for (int j = 0; j < 9; ++j) {
      if (i != j) dense.at(i, j) = sparse.value(i, j);
    }
  }
  const auto from_sparse = hac_ward(sparse, 3).clustering;
  const auto from_dense = hac_ward(dense, 3).clustering;
  REQUIRE(from_sparse.labels == from_dense.labels);
}

TEST_CASE("hac rejects bad K") {
  stck::Rng rng(42);
  const auto s = testutil::random_sim_matrix(4, rng);
  REQUIRE_THROWS_AS(hac_ward(s, 0), std::invalid_argument);
  REQUIRE_THROWS_AS(hac_ward(s, 5), std::invalid_argument);
}

TEST_CASE("labels file round trip") {
  const std::vector<int> labels{0, 2, 1, 1, 0};
  const auto path = testutil::temp_path("labels");
  save_labels(labels, path);
  REQUIRE(load_labels(path) == labels);
}
