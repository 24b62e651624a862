#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>

#include "stck/learners.hpp"
#include "test_util.hpp"

using namespace stck;

namespace {

DenseMatrix cloud_with_outlier(int n, double spread, stck::Rng& rng) {
  DenseMatrix x(n + 1, 2);
  for (int i = 0; i < n; ++i) {
    x.at(i, 0) = spread * rng.normal();
    x.at(i, 1) = spread * rng.normal();
  }
  x.at(n, 0) = 10.0;
  x.at(n, 1) = 10.0;
  return x;
}

std::vector<SparseRow> separable_rows(int per_class) {
  std::vector<SparseRow> rows;
  for (int i = 0; i < per_class; ++i) rows.push_back({{0, 1.0}, {2, 0.1 * i}});
  for (int i = 0; i < per_class; ++i) rows.push_back({{1, 1.0}, {3, 0.1 * i}});
  return rows;
}

}  // namespace

TEST_CASE("iforest on identical rows gives equal scores") {
  DenseMatrix x(20, 3);
  for (auto& v : x.data) v = 0.7;
  stck::Rng rng(50);
  const auto forest = iforest_fit(x, {100, 256, 0.5}, rng);
  const auto scores = iforest_scores(forest, x);
  for (double s : scores) {
    REQUIRE(s == scores[0]);
    REQUIRE(s > 0.0);
    REQUIRE(s < 1.0);
  }
}

TEST_CASE("iforest smallest case: one tree, two points") {
  DenseMatrix x(2, 1);
  x.at(0, 0) = 0.0;
  x.at(1, 0) = 1.0;
  stck::Rng rng(51);
  const auto forest = iforest_fit(x, {1, 2, 0.5}, rng);
  const auto scores = iforest_scores(forest, x);
  for (double s : scores) {
    REQUIRE(std::isfinite(s));
    REQUIRE(s > 0.0);
    REQUIRE(s < 1.0);
  }
}

TEST_CASE("iforest needs at least two rows") {
  DenseMatrix x(1, 2);
  stck::Rng rng(52);
  REQUIRE_THROWS_AS(iforest_fit(x, {}, rng), std::invalid_argument);
}

TEST_CASE("iforest ranks a gross outlier highest almost always") {
  // Margins verified against an independent reference implementation of the
  // same algorithm: over 100 seeded runs the outlier scores >= 0.88 while
  // the worst inlier stays below 0.7, so it is flagged at 0.5 and flagged
  // alone at 0.75.
  int top = 0, flagged_at_half = 0, exact_flag = 0;
  for (int seed = 0; seed < 100; ++seed) {
    stck::Rng data_rng(seed);
    const auto x = cloud_with_outlier(50, 0.3, data_rng);
    stck::Rng rng(1000 + seed);
    const auto forest = iforest_fit(x, {100, 256, 0.5}, rng);
    const auto scores = iforest_scores(forest, x);
    const auto max_it = std::max_element(scores.begin(), scores.end());
    if (max_it - scores.begin() == 50) ++top;
    if (scores[50] > 0.5) ++flagged_at_half;
    const auto flags = iforest_flag(forest, x, 0.75);
    int flagged = 0;
    for (char f : flags) flagged += f;
    if (flagged == 1 && flags[50]) ++exact_flag;
  }
  REQUIRE(top >= 95);
  REQUIRE(flagged_at_half >= 95);
  REQUIRE(exact_flag >= 95);
}

TEST_CASE("iforest scores cluster near 0.5 on uniform data") {
  DenseMatrix x(256, 2);
  stck::Rng data_rng(53);
  for (auto& v : x.data) v = data_rng.uniform();
  stck::Rng rng(54);
  const auto forest = iforest_fit(x, {100, 256, 0.5}, rng);
  const auto scores = iforest_scores(forest, x);

  double mean = 0.0;
  int far_out = 0;
  for (double s : scores) {
    mean += s;
    far_out += s > 0.7 ? 1 : 0;
  }
  mean /= scores.size();
  REQUIRE(mean == Catch::Approx(0.5).margin(0.1));
  REQUIRE(far_out <= 3);  // no point looks anomalous on featureless data

  const auto none = iforest_flag(forest, x, 1.0);
  REQUIRE(std::count(none.begin(), none.end(), 1) == 0);
}

TEST_CASE("iforest duplicated points receive equal scores") {
  DenseMatrix x(30, 2);
  stck::Rng data_rng(55);
  for (int i = 0; i < 15; ++i) {
    const double a = data_rng.normal(), b = data_rng.normal();
    x.at(2 * i, 0) = a;
    x.at(2 * i, 1) = b;
    x.at(2 * i + 1, 0) = a;
    x.at(2 * i + 1, 1) = b;
  }
  stck::Rng rng(56);
  const auto forest = iforest_fit(x, {200, 256, 0.5}, rng);
  const auto scores = iforest_scores(forest, x);
  for (int i = 0; i < 15; ++i) {
    REQUIRE(std::abs(scores[2 * i] - scores[2 * i + 1]) < 0.02);
  }
}

TEST_CASE("dense projection restricts to the cluster's active terms") {
  DocTermMatrix tfidf;
  tfidf.n = 3;
  tfidf.vocab_size = 10;
  tfidf.rows = {{{2, 0.5}, {7, 0.5}}, {{2, 1.0}}, {{9, 1.0}}};
  const auto proj = dense_projection(tfidf, {0, 1});
  REQUIRE(proj.active_terms == std::vector<int>{2, 7});
  REQUIRE(proj.rows.rows == 2);
  REQUIRE(proj.rows.cols == 2);
  REQUIRE(proj.rows.at(0, 0) == 0.5);
  REQUIRE(proj.rows.at(1, 0) == 1.0);
  REQUIRE(proj.rows.at(1, 1) == 0.0);
}

TEST_CASE("logreg fits a separable problem to training accuracy 1") {
  const auto rows = separable_rows(10);
  std::vector<int> labels(20, 0);
  std::fill(labels.begin() + 10, labels.end(), 1);
  LogRegConfig cfg;
  cfg.l2 = 0.0;
  const auto model = logreg_fit(rows, labels, 2, 4, cfg);
  REQUIRE(logreg_predict(model, rows) == labels);
}

TEST_CASE("logreg loss trace is non-increasing") {
  const auto rows = separable_rows(8);
  std::vector<int> labels(16, 0);
  std::fill(labels.begin() + 8, labels.end(), 1);
  const auto model = logreg_fit(rows, labels, 2, 4);
  for (std::size_t i = 1; i < model.loss_trace.size(); ++i) {
    REQUIRE(model.loss_trace[i] <= model.loss_trace[i - 1]);
  }
}

TEST_CASE("logreg analytic gradient matches central finite differences") {
  stck::Rng rng(57);
  for (int trial = 0; trial < 5; ++trial) {
    const int n = 5, dim = 4, k = 3;
    std::vector<SparseRow> rows(n);
    std::vector<int> labels(n);
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < dim; ++j) {
        if (rng.uniform() < 0.7) rows[i].emplace_back(j, rng.normal());
      }
      labels[i] = static_cast<int>(rng.uniform_index(k));
    }
    MultinomialLogReg m;
    m.num_classes = k;
    m.dim = dim;
    m.w.resize(dim * k);
    m.b.resize(k);
    for (auto& w : m.w) w = 0.5 * rng.normal();
    for (auto& b : m.b) b = 0.5 * rng.normal();

    const double l2 = 0.01;
    std::vector<double> gw, gb;
    logreg_gradient(m, rows, labels, l2, gw, gb);

    const double h = 1e-5;
    double max_rel = 0.0;
    auto check = [&](double& param, double analytic) {
      const double orig = param;
      param = orig + h;
      const double up = logreg_loss(m, rows, labels, l2);
      param = orig - h;
      const double down = logreg_loss(m, rows, labels, l2);
      param = orig;
      const double fd = (up - down) / (2.0 * h);
      max_rel = std::max(max_rel, std::abs(fd - analytic) / std::max(1e-4, std::abs(analytic)));
    };
    for (std::size_t j = 0; j < m.w.size(); ++j) check(m.w[j], gw[j]);
    for (std::size_t j = 0; j < m.b.size(); ++j) check(m.b[j], gb[j]);
    REQUIRE(max_rel < 1e-5);
  }
}

TEST_CASE("huge L2 drives weights to zero and predictions to class priors") {
  const auto rows = separable_rows(10);  // 10 + 30 -> priors 0.25 / 0.75
  std::vector<SparseRow> all = rows;
  for (int i = 0; i < 20; ++i) all.push_back({{1, 1.0}});
  std::vector<int> labels(40, 1);
  std::fill(labels.begin(), labels.begin() + 10, 0);
  LogRegConfig cfg;
  cfg.l2 = 1e6;
  const auto model = logreg_fit(all, labels, 2, 4, cfg);
  for (double w : model.w) REQUIRE(std::abs(w) < 1e-4);
  const auto p = logreg_predict_proba(model, all[0]);
  REQUIRE(p[0] == Catch::Approx(0.25).margin(0.02));
  REQUIRE(p[1] == Catch::Approx(0.75).margin(0.02));
}

TEST_CASE("zero row predicts the bias argmax") {
  MultinomialLogReg m;
  m.num_classes = 3;
  m.dim = 5;
  m.w.assign(15, 0.0);
  m.b = {0.1, 0.9, 0.3};
  REQUIRE(logreg_predict(m, SparseRow{}) == 1);
}

TEST_CASE("predicted probabilities sum to one") {
  stck::Rng rng(58);
  MultinomialLogReg m;
  m.num_classes = 4;
  m.dim = 6;
  m.w.resize(24);
  m.b.resize(4);
  for (auto& w : m.w) w = rng.normal();
  for (auto& b : m.b) b = rng.normal();
  for (int trial = 0; trial < 20; ++trial) {
    SparseRow row;
    for (int j = 0; j < 6; ++j) {
      if (rng.uniform() < 0.5) row.emplace_back(j, rng.normal());
    }
    const auto p = logreg_predict_proba(m, row);
    double sum = 0.0;
    for (double v : p) sum += v;
    REQUIRE(std::abs(sum - 1.0) < 1e-9);
  }
}

TEST_CASE("argmax is invariant under a constant shift of all class scores") {
  stck::Rng rng(59);
  MultinomialLogReg m;
  m.num_classes = 3;
  m.dim = 4;
  m.w.resize(12);
  m.b.resize(3);
  for (auto& w : m.w) w = rng.normal();
  for (auto& b : m.b) b = rng.normal();

  MultinomialLogReg shifted = m;
  for (int k = 0; k < 3; ++k) {
    shifted.b[k] += 2.5;
    for (int j = 0; j < 4; ++j) shifted.w[j * 3 + k] += 0.75;  // same shift per feature row
  }
  for (int trial = 0; trial < 30; ++trial) {
    SparseRow row;
    for (int j = 0; j < 4; ++j) row.emplace_back(j, rng.normal());
    REQUIRE(logreg_predict(m, row) == logreg_predict(shifted, row));
  }
}

TEST_CASE("single-class training set predicts that class") {
  std::vector<SparseRow> rows{{{0, 1.0}}, {{1, 1.0}}};
  std::vector<int> labels{2, 2};
  const auto model = logreg_fit(rows, labels, 3, 2);
  REQUIRE(logreg_predict(model, SparseRow{{0, 0.4}}) == 2);
}

TEST_CASE("logreg rejects out-of-range term indices") {
  std::vector<SparseRow> rows{{{0, 1.0}}, {{1, 1.0}}};
  std::vector<int> labels{0, 1};
  const auto model = logreg_fit(rows, labels, 2, 2);
  REQUIRE_THROWS_AS(logreg_predict(model, SparseRow{{5, 1.0}}), std::invalid_argument);
}
