#pragma once

// Clustering evaluation: accuracy via optimal label assignment, normalized
// mutual information, multi-run aggregation, and the paired two-tailed
// t-test used for significance checks.

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

namespace stck {

namespace detail {

// Hungarian algorithm (potentials formulation), O(n^3). Returns for each row
// the column it is assigned to, minimizing total cost on a square matrix.
inline std::vector<int> min_cost_assignment(const std::vector<std::vector<double>>& cost) {
  const int n = static_cast<int>(cost.size());
  const double inf = std::numeric_limits<double>::infinity();
  std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0);
  std::vector<int> match(n + 1, 0), way(n + 1, 0);
  for (int i = 1; i <= n; ++i) {
    match[0] = i;
    int j0 = 0;
    std::vector<double> minv(n + 1, inf);
    std::vector<char> used(n + 1, 0);
    do {
      used[j0] = 1;
      const int i0 = match[j0];
      int j1 = -1;
      double delta = inf;
      for (int j = 1; j <= n; ++j) {
        if (used[j]) continue;
        const double cur = cost[i0 - 1][j - 1] - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (int j = 0; j <= n; ++j) {
        if (used[j]) {
          u[match[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (match[j0] != 0);
    do {
      const int j1 = way[j0];
      match[j0] = match[j1];
      j0 = j1;
    } while (j0 != 0);
  }
  std::vector<int> assignment(n, -1);
  for (int j = 1; j <= n; ++j) {
    if (match[j] != 0) assignment[match[j] - 1] = j - 1;
  }
  return assignment;
}

inline std::vector<std::vector<long long>> contingency_table(const std::vector<int>& a,
                                                             const std::vector<int>& b) {
  int ka = 0, kb = 0;
  for (int x : a) ka = std::max(ka, x + 1);
  for (int x : b) kb = std::max(kb, x + 1);
  std::vector<std::vector<long long>> table(ka, std::vector<long long>(kb, 0));
  for (std::size_t i = 0; i < a.size(); ++i) ++table[a[i]][b[i]];
  return table;
}

}  // namespace detail

// Fraction of correctly clustered points under the best one-to-one mapping
// between predicted and gold cluster ids. The contingency table is padded
// to square with zeros when the cluster counts differ.
inline double accuracy(const std::vector<int>& pred, const std::vector<int>& gold) {
  if (pred.size() != gold.size()) {
    throw std::invalid_argument("accuracy: length mismatch " + std::to_string(pred.size()) +
                                " vs " + std::to_string(gold.size()));
  }
  if (pred.empty()) throw std::invalid_argument("accuracy: empty label vectors");
  const auto table = detail::contingency_table(pred, gold);
  const int kp = static_cast<int>(table.size());
  const int kg = static_cast<int>(table[0].size());
  const int r = std::max(kp, kg);
  std::vector<std::vector<double>> cost(r, std::vector<double>(r, 0.0));
  for (int i = 0; i < kp; ++i) {
    for (int j = 0; j < kg; ++j) cost[i][j] = -static_cast<double>(table[i][j]);
  }
  const auto assignment = detail::min_cost_assignment(cost);
  long long matched = 0;
  for (int i = 0; i < kp; ++i) {
    if (assignment[i] < kg) matched += table[i][assignment[i]];
  }
  return static_cast<double>(matched) / static_cast<double>(pred.size());
}

// NMI with the arithmetic-mean normalizer I / ((H(U) + H(V)) / 2), natural
// log. Two trivial single-cluster partitions are defined as NMI 1; if only
// one partition is trivial the mutual information, and hence NMI, is 0.
// The operands are ordered canonically first so symmetry holds exactly.
inline double nmi(const std::vector<int>& pred, const std::vector<int>& gold) {
  if (pred.size() != gold.size()) {
    throw std::invalid_argument("nmi: length mismatch " + std::to_string(pred.size()) + " vs " +
                                std::to_string(gold.size()));
  }
  if (pred.empty()) throw std::invalid_argument("nmi: empty label vectors");
  if (std::lexicographical_compare(gold.begin(), gold.end(), pred.begin(), pred.end())) {
    return nmi(gold, pred);
  }
  const auto table = detail::contingency_table(pred, gold);
  const double n = static_cast<double>(pred.size());
  const int kp = static_cast<int>(table.size());
  const int kg = static_cast<int>(table[0].size());

  std::vector<double> pa(kp, 0.0), pb(kg, 0.0);
  for (int i = 0; i < kp; ++i) {
    for (int j = 0; j < kg; ++j) {
      pa[i] += static_cast<double>(table[i][j]);
      pb[j] += static_cast<double>(table[i][j]);
    }
  }
  double ha = 0.0, hb = 0.0, mi = 0.0;
  for (int i = 0; i < kp; ++i) {
    if (pa[i] > 0.0) ha -= pa[i] / n * std::log(pa[i] / n);
  }
  for (int j = 0; j < kg; ++j) {
    if (pb[j] > 0.0) hb -= pb[j] / n * std::log(pb[j] / n);
  }
  for (int i = 0; i < kp; ++i) {
    for (int j = 0; j < kg; ++j) {
      const double nij = static_cast<double>(table[i][j]);
      if (nij > 0.0) mi += nij / n * std::log(nij * n / (pa[i] * pb[j]));
    }
  }
  const double denom = (ha + hb) / 2.0;
  if (denom == 0.0) return 1.0;  // both partitions trivial, hence identical
  return std::clamp(mi / denom, 0.0, 1.0);
}

namespace detail {

// Continued fraction for the regularized incomplete beta function
// (Lentz's method).
inline double betacf(double a, double b, double x) {
  constexpr int kMaxIter = 300;
  constexpr double kEps = 1e-14;
  constexpr double kFpMin = 1e-300;
  const double qab = a + b, qap = a + 1.0, qam = a - 1.0;
  double c = 1.0;
  double d = 1.0 - qab * x / qap;
  if (std::fabs(d) < kFpMin) d = kFpMin;
  d = 1.0 / d;
  double h = d;
  for (int m = 1; m <= kMaxIter; ++m) {
    const int m2 = 2 * m;
    double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
    d = 1.0 + aa * d;
    if (std::fabs(d) < kFpMin) d = kFpMin;
    c = 1.0 + aa / c;
    if (std::fabs(c) < kFpMin) c = kFpMin;
    d = 1.0 / d;
    h *= d * c;
    aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
    d = 1.0 + aa * d;
    if (std::fabs(d) < kFpMin) d = kFpMin;
    c = 1.0 + aa / c;
    if (std::fabs(c) < kFpMin) c = kFpMin;
    d = 1.0 / d;
    const double del = d * c;
    h *= del;
    if (std::fabs(del - 1.0) < kEps) break;
  }
  return h;
}

inline double reg_incomplete_beta(double a, double b, double x) {
  if (x <= 0.0) return 0.0;
  if (x >= 1.0) return 1.0;
  const double ln_bt = std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) +
                       a * std::log(x) + b * std::log(1.0 - x);
  const double bt = std::exp(ln_bt);
  if (x < (a + 1.0) / (a + b + 2.0)) return bt * betacf(a, b, x) / a;
  return 1.0 - bt * betacf(b, a, 1.0 - x) / b;
}

// Two-tailed p-value of the Student t statistic with df degrees of freedom.
inline double student_t_two_tailed(double t, double df) {
  return reg_incomplete_beta(df / 2.0, 0.5, df / (df + t * t));
}

}  // namespace detail

struct TTestResult {
  double t = 0.0;
  int df = 0;
  double p = 1.0;
  bool significant = false;
  bool zero_variance = false;
};

// Paired two-tailed t-test over the differences a - b. Zero variance with a
// zero mean reports p = 1; zero variance with a nonzero mean reports p = 0
// and sets the zero_variance flag in both cases.
inline TTestResult paired_ttest(const std::vector<double>& a, const std::vector<double>& b,
                                double alpha = 0.05) {
  if (a.size() != b.size()) throw std::invalid_argument("paired_ttest: length mismatch");
  const int r = static_cast<int>(a.size());
  if (r < 2) throw std::invalid_argument("paired_ttest: need at least 2 pairs");

  // Welford, so constant difference sequences give exactly zero variance.
  double mean = 0.0, m2 = 0.0;
  for (int i = 0; i < r; ++i) {
    const double d = a[i] - b[i];
    const double delta = d - mean;
    mean += delta / (i + 1);
    m2 += delta * (d - mean);
  }
  const double var = m2 / (r - 1);

  TTestResult res;
  res.df = r - 1;
  if (var == 0.0) {
    res.zero_variance = true;
    if (mean == 0.0) {
      res.t = 0.0;
      res.p = 1.0;
    } else {
      res.t = mean > 0.0 ? std::numeric_limits<double>::infinity()
                         : -std::numeric_limits<double>::infinity();
      res.p = 0.0;
    }
  } else {
    res.t = mean / std::sqrt(var / r);
    res.p = detail::student_t_two_tailed(res.t, static_cast<double>(res.df));
  }
  res.significant = res.p < alpha;
  return res;
}

struct EvalReport {
  std::vector<double> acc_runs;
  std::vector<double> nmi_runs;
  double acc_mean = 0.0;
  double acc_std = 0.0;
  double nmi_mean = 0.0;
  double nmi_std = 0.0;
  int runs() const { return static_cast<int>(acc_runs.size()); }
};

namespace detail {

inline std::pair<double, double> mean_std(const std::vector<double>& xs) {
  const int r = static_cast<int>(xs.size());
  double mean = 0.0, m2 = 0.0;
  for (int i = 0; i < r; ++i) {
    const double delta = xs[i] - mean;
    mean += delta / (i + 1);
    m2 += delta * (xs[i] - mean);
  }
  if (r < 2) return {mean, 0.0};
  return {mean, std::sqrt(m2 / (r - 1))};
}

}  // namespace detail

// Sample mean and (r-1)-denominator standard deviation per metric; a single
// run has standard deviation 0 by definition.
inline EvalReport aggregate_runs(const std::vector<std::pair<double, double>>& per_run) {
  if (per_run.empty()) throw std::invalid_argument("aggregate_runs: no runs");
  EvalReport rep;
  for (const auto& [acc, nm] : per_run) {
    rep.acc_runs.push_back(acc);
    rep.nmi_runs.push_back(nm);
  }
  std::tie(rep.acc_mean, rep.acc_std) = detail::mean_std(rep.acc_runs);
  std::tie(rep.nmi_mean, rep.nmi_std) = detail::mean_std(rep.nmi_runs);
  return rep;
}

}  // namespace stck
