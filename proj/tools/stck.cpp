// Command line front-end for the short-text clustering toolkit.
//
// Subcommands: synth, cluster, enhance, evaluate, experiment, sweep.
// STCK_THREADS caps the number of parallel runs.

#include <cstdio>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "stck/stck.hpp"

namespace {

struct Options {
  std::string dataset;
  std::string format = "tsv";
  std::string labels_file;      // gold labels for text_lines datasets
  std::string embeddings;
  std::string stopwords;
  std::string method = "kmeans";
  bool ic = false;
  int k = 0;
  int knn_k = 10;
  int kmm_d = -1;
  int runs = 20;
  int max_iter = 50;
  double p1 = 0.5;
  double p2 = 0.95;
  double fixed_p = -1.0;
  std::uint64_t seed = 0;
  std::string out;
};

stck::CorpusFormat parse_format(const std::string& name) {
  if (name == "tsv" || name == "tsv_label_text") return stck::CorpusFormat::tsv_label_text;
  if (name == "text" || name == "text_lines") return stck::CorpusFormat::text_lines;
  throw std::invalid_argument("unknown format: " + name + " (expected tsv or text_lines)");
}

void add_dataset_flags(CLI::App* cmd, Options& o) {
  cmd->add_option("--dataset", o.dataset, "dataset file")->required();
  cmd->add_option("--format", o.format, "tsv | text_lines (default tsv)");
  cmd->add_option("--labels", o.labels_file, "gold label file for text_lines datasets");
  cmd->add_option("--stopwords", o.stopwords, "stop word file overriding the built-in list");
}

void add_method_flags(CLI::App* cmd, Options& o) {
  cmd->add_option("--method", o.method, "kmeans | kmm | hac | hac_knn | hac_sd");
  cmd->add_option("--embeddings", o.embeddings, "GloVe-style embedding file");
  cmd->add_option("--k", o.k, "number of clusters (default: gold cluster count)");
  cmd->add_option("--knn-k", o.knn_k, "neighbors kept by the k-NN sparsifier");
  cmd->add_option("--kmm-d", o.kmm_d, "outliers removed per k-means-- iteration");
}

void add_enhance_flags(CLI::App* cmd, Options& o) {
  cmd->add_option("--p1", o.p1, "lower training-fraction bound");
  cmd->add_option("--p2", o.p2, "upper training-fraction bound");
  cmd->add_option("--fixed-p", o.fixed_p, "fixed training fraction (overrides --p1/--p2)");
  cmd->add_option("--max-iter", o.max_iter, "iteration cap for iterative classification");
}

stck::ExperimentConfig make_config(const Options& o) {
  stck::ExperimentConfig cfg;
  cfg.dataset_path = o.dataset;
  cfg.dataset_name = o.dataset.empty() ? "dataset" : o.dataset;
  cfg.format = parse_format(o.format);
  if (!o.labels_file.empty()) cfg.labels_path = o.labels_file;
  if (!o.embeddings.empty()) cfg.embeddings_path = o.embeddings;
  if (!o.stopwords.empty()) cfg.stopwords_path = o.stopwords;
  cfg.method = stck::parse_method(o.method);
  cfg.with_ic = o.ic;
  cfg.k = o.k;
  cfg.runs = o.runs;
  cfg.seed = o.seed;
  cfg.knn_k = o.knn_k;
  if (o.kmm_d >= 0) cfg.kmm_d = o.kmm_d;
  cfg.enhance.p1 = o.p1;
  cfg.enhance.p2 = o.p2;
  if (o.fixed_p >= 0.0) cfg.enhance.fixed_p = o.fixed_p;
  cfg.enhance.max_iteration = o.max_iter;
  if (o.embeddings.empty()) {
    std::cerr << "note: no embedding file given; dense vectors fall back to a "
                 "tf-idf spectral projection\n";
  }
  return cfg;
}

int run_synth(const Options& o, int topics, int docs_per_topic, int vocab_per_topic,
              double noise_rate, int tokens_per_doc) {
  stck::SyntheticConfig sc;
  sc.topics = topics;
  sc.docs_per_topic = docs_per_topic;
  sc.vocab_per_topic = vocab_per_topic;
  sc.noise_rate = noise_rate;
  sc.tokens_per_doc = tokens_per_doc;
  stck::Rng rng(o.seed);
  const auto corpus = stck::make_synthetic(sc, rng);
  stck::save_corpus_tsv(corpus, o.out);
  std::cout << "wrote " << corpus.n() << " texts, " << topics << " topics to " << o.out << "\n";
  return 0;
}

int run_cluster(const Options& o) {
  auto cfg = make_config(o);
  const auto corpus = stck::load_corpus(cfg.dataset_path, cfg.format, cfg.labels_path);
  const auto data = stck::prepare_pipeline(corpus, cfg);
  const auto clustering = stck::initial_clustering(data, cfg, cfg.seed);
  stck::save_labels(clustering.labels, o.out);
  std::cout << "clustered " << clustering.n() << " texts into " << clustering.k
            << " clusters (" << o.method << "), labels in " << o.out << "\n";
  if (corpus.gold) {
    std::printf("ACC %.4f NMI %.4f\n", stck::accuracy(clustering.labels, *corpus.gold),
                stck::nmi(clustering.labels, *corpus.gold));
  }
  return 0;
}

int run_enhance(const Options& o, const std::string& labels_in, const std::string& trace_out) {
  auto cfg = make_config(o);
  const auto corpus = stck::load_corpus(cfg.dataset_path, cfg.format, cfg.labels_path);
  const auto data = stck::prepare_pipeline(corpus, cfg);

  stck::Clustering initial;
  if (!labels_in.empty()) {
    initial.labels = stck::load_labels(labels_in);
    if (static_cast<int>(initial.labels.size()) != corpus.n()) {
      throw std::runtime_error("initial labels file does not match corpus size");
    }
    initial.k = data.k;
    for (int l : initial.labels) initial.k = std::max(initial.k, l + 1);
  } else {
    initial = stck::initial_clustering(data, cfg, cfg.seed);
  }

  stck::EnhanceConfig ec = cfg.enhance;
  ec.seed = stck::derive_seed(cfg.seed, 1);
  const auto [enhanced, trace] = stck::iterative_classification(data.tfidf, initial, ec);
  stck::save_labels(enhanced.labels, o.out);
  if (!trace_out.empty()) stck::save_trace_csv(trace, trace_out);

  const auto& last = trace.records.back();
  std::cout << "iterative classification: " << trace.records.size() << " iterations, "
            << (last.stable ? "stable" : "iteration cap reached") << ", labels in " << o.out
            << "\n";
  if (corpus.gold) {
    std::printf("initial  ACC %.4f NMI %.4f\n", stck::accuracy(initial.labels, *corpus.gold),
                stck::nmi(initial.labels, *corpus.gold));
    std::printf("enhanced ACC %.4f NMI %.4f\n", stck::accuracy(enhanced.labels, *corpus.gold),
                stck::nmi(enhanced.labels, *corpus.gold));
  }
  return 0;
}

int run_evaluate(const Options& o, const std::string& pred_file) {
  const auto corpus = stck::load_corpus(o.dataset, parse_format(o.format),
                                        o.labels_file.empty()
                                            ? std::nullopt
                                            : std::optional<std::string>(o.labels_file));
  if (!corpus.gold) throw std::runtime_error("evaluate: dataset has no gold labels");
  const auto pred = stck::load_labels(pred_file);
  if (pred.size() != corpus.gold->size()) {
    throw std::runtime_error("evaluate: label count does not match corpus size");
  }
  const double acc = stck::accuracy(pred, *corpus.gold);
  const double nm = stck::nmi(pred, *corpus.gold);
  std::printf("ACC %.4f\nNMI %.4f\n", acc, nm);
  if (!o.out.empty()) {
    std::ofstream out(o.out);
    out << "acc,nmi\n";
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.6f,%.6f\n", acc, nm);
    out << buf;
  }
  return 0;
}

int run_experiment_cmd(const Options& o) {
  auto cfg = make_config(o);
  const auto result = stck::run_experiment(cfg);
  stck::write_report_csv({result}, o.out);
  std::printf("%-12s ACC %.2f±%.2f NMI %.2f±%.2f (%d run%s)\n", result.method_label.c_str(),
              100.0 * result.initial.acc_mean, 100.0 * result.initial.acc_std,
              100.0 * result.initial.nmi_mean, 100.0 * result.initial.nmi_std,
              result.initial.runs(), result.initial.runs() == 1 ? "" : "s");
  if (result.enhanced) {
    std::printf("%-12s ACC %.2f±%.2f NMI %.2f±%.2f (%d runs)\n",
                (result.method_label + "_ic").c_str(), 100.0 * result.enhanced->acc_mean,
                100.0 * result.enhanced->acc_std, 100.0 * result.enhanced->nmi_mean,
                100.0 * result.enhanced->nmi_std, result.enhanced->runs());
  }
  std::cout << "report written to " << o.out << "\n";
  return 0;
}

int run_sweep_cmd(const Options& o, const std::string& mode, double start, double stop,
                  double step, double fixed_value) {
  auto cfg = make_config(o);
  cfg.with_ic = true;
  stck::SweepSpec spec;
  if (mode == "fixed_p") spec.mode = stck::SweepMode::fixed_p;
  else if (mode == "vary_p1") spec.mode = stck::SweepMode::vary_p1;
  else if (mode == "vary_p2") spec.mode = stck::SweepMode::vary_p2;
  else throw std::invalid_argument("unknown sweep mode: " + mode);
  spec.start = start;
  spec.stop = stop;
  spec.step = step;
  spec.fixed_value = fixed_value;
  const auto points = stck::run_sweep(cfg, spec);
  stck::write_sweep_csv(points, o.out);
  for (const auto& p : points) {
    std::printf("P=%.2f  ACC %.2f±%.2f\n", p.value, 100.0 * p.acc_mean, 100.0 * p.acc_std);
  }
  std::cout << "sweep written to " << o.out << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"short-text clustering with iterative-classification enhancement"};
  app.require_subcommand(1);
  app.fallthrough();
  app.set_config("--config", "", "key = value config file; flags override");

  Options o;
  app.add_option("--seed", o.seed, "master RNG seed")->capture_default_str();
  app.add_option("--runs", o.runs, "runs per experiment")->capture_default_str();
  app.add_option("--out", o.out, "output file");

  // synth
  int topics = 3, docs_per_topic = 50, vocab_per_topic = 30, tokens_per_doc = 8;
  double noise_rate = 0.0;
  auto* synth = app.add_subcommand("synth", "generate a synthetic labeled corpus (TSV)");
  synth->add_option("--topics", topics, "number of planted topics");
  synth->add_option("--docs-per-topic", docs_per_topic, "documents per topic");
  synth->add_option("--vocab-per-topic", vocab_per_topic, "vocabulary size per topic");
  synth->add_option("--noise-rate", noise_rate, "fraction of tokens from the shared vocabulary");
  synth->add_option("--tokens-per-doc", tokens_per_doc, "tokens per document");

  // cluster
  auto* cluster = app.add_subcommand("cluster", "produce an initial clustering");
  add_dataset_flags(cluster, o);
  add_method_flags(cluster, o);

  // enhance
  std::string labels_in, trace_out;
  auto* enhance = app.add_subcommand("enhance", "enhance a clustering by iterative classification");
  add_dataset_flags(enhance, o);
  add_method_flags(enhance, o);
  add_enhance_flags(enhance, o);
  enhance->add_option("--labels-in", labels_in, "initial labels file (else --method is run)");
  enhance->add_option("--trace", trace_out, "write per-iteration trace CSV here");

  // evaluate
  std::string pred_file;
  auto* evaluate = app.add_subcommand("evaluate", "score a labels file against gold labels");
  add_dataset_flags(evaluate, o);
  evaluate->add_option("--pred", pred_file, "predicted labels file")->required();

  // experiment
  auto* experiment = app.add_subcommand("experiment", "multi-run protocol with mean/std report");
  add_dataset_flags(experiment, o);
  add_method_flags(experiment, o);
  add_enhance_flags(experiment, o);
  experiment->add_flag("--ic", o.ic, "also run iterative classification");

  // sweep
  std::string sweep_mode = "fixed_p";
  double sweep_start = 0.4, sweep_stop = 0.95, sweep_step = 0.05, sweep_fixed = 0.9;
  auto* sweep = app.add_subcommand("sweep", "training-fraction parameter sweep");
  add_dataset_flags(sweep, o);
  add_method_flags(sweep, o);
  add_enhance_flags(sweep, o);
  sweep->add_option("--mode", sweep_mode, "fixed_p | vary_p1 | vary_p2");
  sweep->add_option("--start", sweep_start, "grid start");
  sweep->add_option("--stop", sweep_stop, "grid stop");
  sweep->add_option("--step", sweep_step, "grid step");
  sweep->add_option("--fixed-value", sweep_fixed, "the non-varied bound");

  CLI11_PARSE(app, argc, argv);

  try {
    if (synth->parsed()) {
      if (o.out.empty()) throw std::invalid_argument("synth requires --out");
      return run_synth(o, topics, docs_per_topic, vocab_per_topic, noise_rate, tokens_per_doc);
    }
    if (cluster->parsed()) {
      if (o.out.empty()) throw std::invalid_argument("cluster requires --out");
      return run_cluster(o);
    }
    if (enhance->parsed()) {
      if (o.out.empty()) throw std::invalid_argument("enhance requires --out");
      return run_enhance(o, labels_in, trace_out);
    }
    if (evaluate->parsed()) return run_evaluate(o, pred_file);
    if (experiment->parsed()) {
      if (o.out.empty()) throw std::invalid_argument("experiment requires --out");
      o.ic = o.ic || experiment->count("--ic") > 0;
      return run_experiment_cmd(o);
    }
    if (sweep->parsed()) {
      if (o.out.empty()) throw std::invalid_argument("sweep requires --out");
      return run_sweep_cmd(o, sweep_mode, sweep_start, sweep_stop, sweep_step, sweep_fixed);
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
