#pragma once

// Experiment orchestration: the vectorize -> cluster -> enhance -> evaluate
// pipeline, the 20-run protocol with mean/std aggregation, and parameter
// sweeps over the training-fraction bounds.

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "stck/clustering.hpp"
#include "stck/corpus.hpp"
#include "stck/enhance.hpp"
#include "stck/evaluate.hpp"
#include "stck/rng.hpp"
#include "stck/similarity.hpp"
#include "stck/vectorize.hpp"

namespace stck {

enum class Method { kmeans, kmm, hac, hac_knn, hac_sd };

inline std::string method_name(Method m) {
  switch (m) {
    case Method::kmeans: return "kmeans";
    case Method::kmm: return "kmm";
    case Method::hac: return "hac";
    case Method::hac_knn: return "hac_knn";
    case Method::hac_sd: return "hac_sd";
  }
  return "?";
}

inline Method parse_method(const std::string& name) {
  if (name == "kmeans") return Method::kmeans;
  if (name == "kmm") return Method::kmm;
  if (name == "hac") return Method::hac;
  if (name == "hac_knn") return Method::hac_knn;
  if (name == "hac_sd") return Method::hac_sd;
  throw std::invalid_argument("unknown method: " + name);
}

inline bool is_stochastic(Method m) { return m == Method::kmeans || m == Method::kmm; }

struct ExperimentConfig {
  std::string dataset_path;
  std::string dataset_name = "dataset";
  CorpusFormat format = CorpusFormat::tsv_label_text;
  std::optional<std::string> labels_path;      // for text_lines datasets
  std::optional<std::string> embeddings_path;  // dense vectors; projection fallback otherwise
  std::optional<std::string> stopwords_path;

  Method method = Method::kmeans;
  bool with_ic = true;
  int k = 0;  // 0: use the gold cluster count
  int runs = 20;
  std::uint64_t seed = 0;

  int knn_k = 10;
  std::optional<int> kmm_d;  // default ceil(0.1 * n)
  int kmeans_max_iters = 100;
  int projection_dim = 64;
  EnhanceConfig enhance;
};

struct ExperimentResult {
  std::string method_label;
  std::string dataset_name;
  EvalReport initial;
  std::optional<EvalReport> enhanced;
};

// ---------------------------------------------------------------------------
// parallel runs
// ---------------------------------------------------------------------------

inline int thread_cap() {
  if (const char* env = std::getenv("STCK_THREADS")) {
    const int v = std::atoi(env);
    if (v >= 1) return v;
  }
  const unsigned hc = std::thread::hardware_concurrency();
  return hc == 0 ? 1 : static_cast<int>(hc);
}

// Runs fn(0..count-1) on up to STCK_THREADS workers. Results must be written
// to per-index slots; the first exception is rethrown.
inline void parallel_for(int count, const std::function<void(int)>& fn) {
  const int threads = std::min(thread_cap(), count);
  if (threads <= 1) {
    for (int i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<int> next{0};
  std::vector<std::exception_ptr> errors(threads);
  std::vector<std::thread> pool;
  for (int t = 0; t < threads; ++t) {
    pool.emplace_back([&, t] {
      try {
        for (;;) {
          const int i = next.fetch_add(1);
          if (i >= count) break;
          fn(i);
        }
      } catch (...) {
        errors[t] = std::current_exception();
        next.store(count);
      }
    });
  }
  for (auto& th : pool) th.join();
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

// ---------------------------------------------------------------------------
// embedding-free fallback
// ---------------------------------------------------------------------------

namespace detail {

inline void orthonormalize_columns(DenseMatrix& g, Rng& rng) {
  for (int c = 0; c < g.cols; ++c) {
    for (int attempt = 0; attempt < 2; ++attempt) {
      for (int prev = 0; prev < c; ++prev) {
        double proj = 0.0;
        for (int r = 0; r < g.rows; ++r) proj += g.at(r, c) * g.at(r, prev);
        for (int r = 0; r < g.rows; ++r) g.at(r, c) -= proj * g.at(r, prev);
      }
      double norm = 0.0;
      for (int r = 0; r < g.rows; ++r) norm += g.at(r, c) * g.at(r, c);
      norm = std::sqrt(norm);
      if (norm > 1e-12) {
        for (int r = 0; r < g.rows; ++r) g.at(r, c) /= norm;
        break;
      }
      if (attempt == 0) {
        for (int r = 0; r < g.rows; ++r) g.at(r, c) = rng.normal();
      } else {
        for (int r = 0; r < g.rows; ++r) g.at(r, c) = 0.0;
      }
    }
  }
}

}  // namespace detail

// Projects tf-idf rows onto their top-m spectral components via orthogonal
// (block power) iteration on X^T X. Stands in for pretrained embeddings when
// none are supplied; reported numbers then reflect this substitution.
inline DenseMatrix project_tfidf(const DocTermMatrix& x, int m, std::uint64_t seed,
                                 int iterations = 30) {
  const int n = x.n;
  const int v = x.vocab_size;
  const int dims = std::min({m, v, n});
  if (dims < 1) return DenseMatrix(n, 1);

  Rng rng(seed);
  DenseMatrix g(v, dims);
  for (auto& val : g.data) val = rng.normal();
  detail::orthonormalize_columns(g, rng);

  DenseMatrix y(n, dims), z(v, dims);
  for (int it = 0; it < iterations; ++it) {
    // y = X g ; z = X^T y ; g = orthonormalize(z)
    std::fill(y.data.begin(), y.data.end(), 0.0);
    for (int r = 0; r < n; ++r) {
      for (const auto& [term, w] : x.rows[r]) {
        const double* grow = g.data.data() + static_cast<std::size_t>(term) * dims;
        double* yrow = y.data.data() + static_cast<std::size_t>(r) * dims;
        for (int c = 0; c < dims; ++c) yrow[c] += w * grow[c];
      }
    }
    std::fill(z.data.begin(), z.data.end(), 0.0);
    for (int r = 0; r < n; ++r) {
      const double* yrow = y.data.data() + static_cast<std::size_t>(r) * dims;
      for (const auto& [term, w] : x.rows[r]) {
        double* zrow = z.data.data() + static_cast<std::size_t>(term) * dims;
        for (int c = 0; c < dims; ++c) zrow[c] += w * yrow[c];
      }
    }
    g.data.swap(z.data);
    detail::orthonormalize_columns(g, rng);
  }

  DenseMatrix out(n, dims);
  for (int r = 0; r < n; ++r) {
    for (const auto& [term, w] : x.rows[r]) {
      const double* grow = g.data.data() + static_cast<std::size_t>(term) * dims;
      double* orow = out.data.data() + static_cast<std::size_t>(r) * dims;
      for (int c = 0; c < dims; ++c) orow[c] += w * grow[c];
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// pipeline
// ---------------------------------------------------------------------------

// Precomputed representations shared by all runs of an experiment.
struct PipelineData {
  Corpus corpus;
  DocTermMatrix tfidf;
  DenseMatrix dense;
  bool dense_from_projection = false;
  int k = 0;
};

inline PipelineData prepare_pipeline(const Corpus& raw_corpus, const ExperimentConfig& cfg) {
  PipelineData data;
  PreprocessConfig pre;
  if (cfg.stopwords_path) pre.stopwords = load_stopwords(*cfg.stopwords_path);
  data.corpus = preprocess(raw_corpus, pre);

  auto [vocab, tfidf] = build_tfidf(data.corpus);
  data.tfidf = std::move(tfidf);

  if (cfg.embeddings_path) {
    const auto table = load_embeddings(*cfg.embeddings_path);
    data.dense = embed_average(data.corpus, table);
  } else {
    data.dense = project_tfidf(data.tfidf, cfg.projection_dim, derive_seed(cfg.seed, 0xfa11b4cc));
    data.dense_from_projection = true;
  }

  data.k = cfg.k;
  if (data.k <= 0) {
    if (!data.corpus.gold) {
      throw std::invalid_argument("K not given and dataset has no gold labels");
    }
    data.k = data.corpus.num_gold_clusters();
  }
  return data;
}

inline Clustering initial_clustering(const PipelineData& data, const ExperimentConfig& cfg,
                                     std::uint64_t seed) {
  switch (cfg.method) {
    case Method::kmeans: {
      KMeansConfig kc{data.k, cfg.kmeans_max_iters, seed};
      return kmeans(data.dense, kc).clustering;
    }
    case Method::kmm: {
      KmmConfig mc;
      mc.base = KMeansConfig{data.k, cfg.kmeans_max_iters, seed};
      mc.outliers_per_iter =
          cfg.kmm_d ? *cfg.kmm_d : static_cast<int>(std::ceil(0.1 * data.corpus.n()));
      return kmeans_minus_minus(data.dense, mc).clustering;
    }
    case Method::hac:
      return hac_ward(cosine_matrix(data.dense), data.k).clustering;
    case Method::hac_knn:
      return hac_ward(sparsify_knn(cosine_matrix(data.dense), cfg.knn_k), data.k).clustering;
    case Method::hac_sd:
      return hac_ward(sparsify_sd(cosine_matrix(data.dense), data.k), data.k).clustering;
  }
  throw std::logic_error("unreachable");
}

// Stochastic initializers are rerun per run with seed + r; the HAC family is
// clustered once and only the enhancement is repeated. Per-run enhancement
// seeds are derived from seed + r on a separate stream.
inline ExperimentResult run_experiment_on(const Corpus& raw_corpus, const ExperimentConfig& cfg) {
  if (cfg.runs < 1) throw std::invalid_argument("experiment: runs must be >= 1");
  const auto data = prepare_pipeline(raw_corpus, cfg);
  if (!data.corpus.gold) {
    throw std::invalid_argument("experiment: dataset has no gold labels to evaluate against");
  }
  const auto& gold = *data.corpus.gold;

  ExperimentResult result;
  result.method_label = method_name(cfg.method);
  result.dataset_name = cfg.dataset_name;

  std::vector<std::pair<double, double>> initial_metrics;
  std::vector<std::pair<double, double>> enhanced_metrics(cfg.runs);

  if (is_stochastic(cfg.method)) {
    initial_metrics.resize(cfg.runs);
    std::vector<std::pair<double, double>> init_slots(cfg.runs);
    parallel_for(cfg.runs, [&](int r) {
      const std::uint64_t run_seed = cfg.seed + static_cast<std::uint64_t>(r);
      const auto initial = initial_clustering(data, cfg, run_seed);
      init_slots[r] = {accuracy(initial.labels, gold), nmi(initial.labels, gold)};
      if (cfg.with_ic) {
        EnhanceConfig ec = cfg.enhance;
        ec.seed = derive_seed(run_seed, 1);
        const auto [enhanced, trace] = iterative_classification(data.tfidf, initial, ec);
        enhanced_metrics[r] = {accuracy(enhanced.labels, gold), nmi(enhanced.labels, gold)};
      }
    });
    initial_metrics = std::move(init_slots);
  } else {
    const auto initial = initial_clustering(data, cfg, cfg.seed);
    initial_metrics.push_back({accuracy(initial.labels, gold), nmi(initial.labels, gold)});
    if (cfg.with_ic) {
      parallel_for(cfg.runs, [&](int r) {
        const std::uint64_t run_seed = cfg.seed + static_cast<std::uint64_t>(r);
        EnhanceConfig ec = cfg.enhance;
        ec.seed = derive_seed(run_seed, 1);
        const auto [enhanced, trace] = iterative_classification(data.tfidf, initial, ec);
        enhanced_metrics[r] = {accuracy(enhanced.labels, gold), nmi(enhanced.labels, gold)};
      });
    }
  }

  result.initial = aggregate_runs(initial_metrics);
  if (cfg.with_ic) result.enhanced = aggregate_runs(enhanced_metrics);
  return result;
}

inline ExperimentResult run_experiment(const ExperimentConfig& cfg) {
  const auto corpus = load_corpus(cfg.dataset_path, cfg.format, cfg.labels_path);
  return run_experiment_on(corpus, cfg);
}

inline void write_report_csv(const std::vector<ExperimentResult>& results,
                             const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write report file: " + path);
  out << "method,dataset,acc_mean,acc_std,nmi_mean,nmi_std,runs\n";
  char buf[256];
  const auto row = [&](const std::string& label, const std::string& dataset,
                       const EvalReport& rep) {
    std::snprintf(buf, sizeof(buf), "%s,%s,%.6f,%.6f,%.6f,%.6f,%d\n", label.c_str(),
                  dataset.c_str(), rep.acc_mean, rep.acc_std, rep.nmi_mean, rep.nmi_std,
                  rep.runs());
    out << buf;
  };
  for (const auto& res : results) {
    row(res.method_label, res.dataset_name, res.initial);
    if (res.enhanced) row(res.method_label + "_ic", res.dataset_name, *res.enhanced);
  }
}

// ---------------------------------------------------------------------------
// parameter sweeps
// ---------------------------------------------------------------------------

enum class SweepMode { fixed_p, vary_p1, vary_p2 };

struct SweepSpec {
  SweepMode mode = SweepMode::fixed_p;
  double start = 0.4;
  double stop = 0.95;
  double step = 0.05;
  double fixed_value = 0.9;  // the non-varied bound for vary_p1 / vary_p2

  std::vector<double> grid() const {
    if (step <= 0.0) throw std::invalid_argument("sweep: step must be positive");
    if (stop < start) throw std::invalid_argument("sweep: empty grid");
    const int count = static_cast<int>(std::llround((stop - start) / step)) + 1;
    std::vector<double> out;
    for (int i = 0; i < count; ++i) out.push_back(start + i * step);
    return out;
  }
};

struct SweepPoint {
  double value = 0.0;
  double acc_mean = 0.0;
  double acc_std = 0.0;
  double nmi_mean = 0.0;
  double nmi_std = 0.0;
};

inline std::vector<SweepPoint> run_sweep_on(const Corpus& corpus, const ExperimentConfig& base,
                                            const SweepSpec& sweep) {
  std::vector<SweepPoint> points;
  for (double v : sweep.grid()) {
    ExperimentConfig cfg = base;
    cfg.with_ic = true;
    switch (sweep.mode) {
      case SweepMode::fixed_p:
        cfg.enhance.fixed_p = v;
        break;
      case SweepMode::vary_p1:
        cfg.enhance.fixed_p.reset();
        cfg.enhance.p1 = v;
        cfg.enhance.p2 = sweep.fixed_value;
        break;
      case SweepMode::vary_p2:
        cfg.enhance.fixed_p.reset();
        cfg.enhance.p1 = sweep.fixed_value;
        cfg.enhance.p2 = v;
        break;
    }
    const auto res = run_experiment_on(corpus, cfg);
    const EvalReport& rep = *res.enhanced;
    points.push_back({v, rep.acc_mean, rep.acc_std, rep.nmi_mean, rep.nmi_std});
  }
  return points;
}

inline std::vector<SweepPoint> run_sweep(const ExperimentConfig& base, const SweepSpec& sweep) {
  const auto corpus = load_corpus(base.dataset_path, base.format, base.labels_path);
  return run_sweep_on(corpus, base, sweep);
}

inline void write_sweep_csv(const std::vector<SweepPoint>& points, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write sweep file: " + path);
  out << "param,acc_mean,acc_std,nmi_mean,nmi_std\n";
  char buf[160];
  for (const auto& p : points) {
    std::snprintf(buf, sizeof(buf), "%.6f,%.6f,%.6f,%.6f,%.6f\n", p.value, p.acc_mean, p.acc_std,
                  p.nmi_mean, p.nmi_std);
    out << buf;
  }
}

}  // namespace stck
