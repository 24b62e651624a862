#pragma once

// Text vectorization: tf-idf sparse rows and embedding-average dense rows.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

#include "stck/corpus.hpp"
#include "stck/matrix.hpp"

namespace stck {

struct Vocabulary {
  std::unordered_map<std::string, int> index;  // term -> dense id in [0, V)
  std::vector<std::string> terms;              // id -> term
  std::vector<int> df;                         // id -> document frequency
  int size() const { return static_cast<int>(terms.size()); }
};

struct DocTermMatrix {
  int n = 0;
  int vocab_size = 0;
  std::vector<SparseRow> rows;  // sorted by term index; nonzero weights only
};

struct TfidfConfig {
  // idf = ln(n / df); the smoothed variant ln((1+n)/(1+df)) + 1 keeps terms
  // with df = n from vanishing.
  bool smooth_idf = false;
};

// tf-idf with raw term counts and L2-normalized nonzero rows. Terms whose
// weight is zero everywhere (df = n under the unsmoothed idf) stay in the
// vocabulary but produce no row entries.
inline std::pair<Vocabulary, DocTermMatrix> build_tfidf(const Corpus& corpus,
                                                        const TfidfConfig& cfg = {}) {
  Vocabulary vocab;
  const int n = corpus.n();
  std::vector<std::vector<std::pair<int, int>>> counts(n);  // (term id, tf)

  for (int d = 0; d < n; ++d) {
    std::unordered_map<int, int> tf;
    for (const auto& tok : corpus.docs[d].tokens) {
      auto [it, inserted] = vocab.index.emplace(tok, vocab.size());
      if (inserted) {
        vocab.terms.push_back(tok);
        vocab.df.push_back(0);
      }
      ++tf[it->second];
    }
    counts[d].assign(tf.begin(), tf.end());
    std::sort(counts[d].begin(), counts[d].end());
    for (const auto& [term, c] : counts[d]) ++vocab.df[term];
  }

  std::vector<double> idf(vocab.size());
  for (int t = 0; t < vocab.size(); ++t) {
    idf[t] = cfg.smooth_idf ? std::log((1.0 + n) / (1.0 + vocab.df[t])) + 1.0
                            : std::log(static_cast<double>(n) / vocab.df[t]);
  }

  DocTermMatrix mat;
  mat.n = n;
  mat.vocab_size = vocab.size();
  mat.rows.resize(n);
  for (int d = 0; d < n; ++d) {
    SparseRow row;
    for (const auto& [term, c] : counts[d]) {
      const double w = c * idf[term];
      if (w != 0.0) row.emplace_back(term, w);
    }
    const double norm = sparse_norm2(row);
    if (norm > 0.0) {
      for (auto& [term, w] : row) w /= norm;
    }
    mat.rows[d] = std::move(row);
  }
  return {std::move(vocab), std::move(mat)};
}

struct EmbeddingTable {
  std::unordered_map<std::string, std::vector<double>> vectors;
  int dim = 0;
};

// GloVe-style text format: `word v1 ... vm`, whitespace separated. The
// dimension is fixed by the first line; a duplicate word keeps its last
// occurrence.
inline EmbeddingTable load_embeddings(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open embedding file: " + path);
  EmbeddingTable table;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    detail::strip_trailing_newline(line);
    if (line.empty()) continue;
    std::istringstream ss(line);
    std::string word;
    ss >> word;
    std::vector<double> vec;
    double v;
    while (ss >> v) vec.push_back(v);
    if (!ss.eof()) {
      throw std::runtime_error(path + " line " + std::to_string(line_no) +
                               ": non-numeric embedding component");
    }
    if (vec.empty()) {
      throw std::runtime_error(path + " line " + std::to_string(line_no) +
                               ": no embedding components");
    }
    if (table.dim == 0) {
      table.dim = static_cast<int>(vec.size());
    } else if (static_cast<int>(vec.size()) != table.dim) {
      throw std::runtime_error(path + " line " + std::to_string(line_no) +
                               ": dimension " + std::to_string(vec.size()) +
                               " does not match " + std::to_string(table.dim));
    }
    table.vectors[word] = std::move(vec);
  }
  return table;
}

// Row i is the mean of the embeddings of doc i's in-vocabulary tokens.
// Out-of-vocabulary tokens are skipped; all-OOV documents get a zero row.
inline DenseMatrix embed_average(const Corpus& corpus, const EmbeddingTable& table) {
  DenseMatrix out(corpus.n(), table.dim);
  for (int d = 0; d < corpus.n(); ++d) {
    auto row = out.row(d);
    int hits = 0;
    for (const auto& tok : corpus.docs[d].tokens) {
      auto it = table.vectors.find(tok);
      if (it == table.vectors.end()) continue;
      ++hits;
      for (int j = 0; j < table.dim; ++j) row[j] += it->second[j];
    }
    if (hits > 0) {
      for (int j = 0; j < table.dim; ++j) row[j] /= hits;
    }
  }
  return out;
}

// Debug export: one `(row, term_index, weight)` triple per line.
inline void save_tfidf_csv(const DocTermMatrix& mat, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write tf-idf file: " + path);
  out << "row,term_index,weight\n";
  char buf[64];
  for (int d = 0; d < mat.n; ++d) {
    for (const auto& [term, w] : mat.rows[d]) {
      std::snprintf(buf, sizeof(buf), "%d,%d,%.12g\n", d, term, w);
      out << buf;
    }
  }
}

}  // namespace stck
