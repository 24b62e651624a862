#pragma once

// Synthetic short-text corpora with planted topics, used as desk-scale
// ground truth for pipeline tests.

#include <stdexcept>
#include <string>
#include <vector>

#include "stck/corpus.hpp"
#include "stck/rng.hpp"

namespace stck {

struct SyntheticConfig {
  int topics = 3;
  int docs_per_topic = 50;
  int vocab_per_topic = 30;
  double noise_rate = 0.0;  // fraction of tokens drawn from the shared noise vocabulary
  int tokens_per_doc = 8;
};

// Documents draw tokens from disjoint per-topic vocabularies; a noise_rate
// fraction comes from a shared vocabulary of the same size. Gold labels are
// the topic ids. Tokens are already lowercase alphanumerics, so the corpus
// is preprocessing-stable.
inline Corpus make_synthetic(const SyntheticConfig& cfg, Rng& rng) {
  if (cfg.topics < 1 || cfg.docs_per_topic < 1 || cfg.vocab_per_topic < 1 ||
      cfg.tokens_per_doc < 1 || cfg.noise_rate < 0.0 || cfg.noise_rate > 1.0) {
    throw std::invalid_argument("make_synthetic: bad configuration");
  }
  Corpus corpus;
  corpus.gold.emplace();
  for (int t = 0; t < cfg.topics; ++t) {
    corpus.label_names.push_back("topic" + std::to_string(t));
    for (int d = 0; d < cfg.docs_per_topic; ++d) {
      Document doc;
      doc.id = corpus.n();
      for (int w = 0; w < cfg.tokens_per_doc; ++w) {
        std::string tok;
        if (rng.uniform() < cfg.noise_rate) {
          tok = "noise" + std::to_string(rng.uniform_index(cfg.vocab_per_topic));
        } else {
          tok = "t" + std::to_string(t) + "w" + std::to_string(rng.uniform_index(cfg.vocab_per_topic));
        }
        if (w > 0) doc.raw += ' ';
        doc.raw += tok;
        doc.tokens.push_back(std::move(tok));
      }
      corpus.docs.push_back(std::move(doc));
      corpus.gold->push_back(t);
    }
  }
  return corpus;
}

inline Corpus make_synthetic(int topics, int docs_per_topic, int vocab_per_topic,
                             double noise_rate, Rng& rng) {
  SyntheticConfig cfg;
  cfg.topics = topics;
  cfg.docs_per_topic = docs_per_topic;
  cfg.vocab_per_topic = vocab_per_topic;
  cfg.noise_rate = noise_rate;
  return make_synthetic(cfg, rng);
}

}  // namespace stck
