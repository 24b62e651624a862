#pragma once

// Short-text corpus loading and preprocessing: whitespace tokenization,
// punctuation removal, lowercasing, stop word filtering.

#include <cstdint>
#include <fstream>
#include <optional>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

#include "stck/stopwords.hpp"

namespace stck {

struct Document {
  int id = 0;
  std::string raw;
  std::vector<std::string> tokens;
};

struct Corpus {
  std::vector<Document> docs;
  std::optional<std::vector<int>> gold;  // dense ids in [0, G)
  std::vector<std::string> label_names;  // original label strings, index = dense id
  int n() const { return static_cast<int>(docs.size()); }
  int num_gold_clusters() const { return static_cast<int>(label_names.size()); }
};

struct PreprocessConfig {
  std::set<std::string> stopwords = default_stopwords();
  bool lowercase = true;
};

enum class CorpusFormat { tsv_label_text, text_lines };

namespace detail {

inline bool is_space_cp(std::uint32_t cp) {
  switch (cp) {
    case 0x09: case 0x0a: case 0x0b: case 0x0c: case 0x0d: case 0x20:
    case 0x85: case 0xa0: case 0x1680: case 0x2028: case 0x2029:
    case 0x202f: case 0x205f: case 0x3000:
      return true;
    default:
      return cp >= 0x2000 && cp <= 0x200a;
  }
}

inline bool is_punct_cp(std::uint32_t cp) {
  if (cp < 0x80) {
    return (cp >= 0x21 && cp <= 0x2f) || (cp >= 0x3a && cp <= 0x40) ||
           (cp >= 0x5b && cp <= 0x60) || (cp >= 0x7b && cp <= 0x7e);
  }
  switch (cp) {
    case 0xa1: case 0xab: case 0xb7: case 0xbb: case 0xbf:
      return true;
    default:
      return cp >= 0x2010 && cp <= 0x2027;  // dashes, quotes, ellipsis
  }
}

// Decodes one UTF-8 code point starting at i; advances i. Invalid bytes are
// passed through as their byte value.
inline std::uint32_t decode_utf8(const std::string& s, std::size_t& i) {
  const auto b0 = static_cast<unsigned char>(s[i]);
  int extra = 0;
  std::uint32_t cp = b0;
  if (b0 >= 0xf0) { extra = 3; cp = b0 & 0x07u; }
  else if (b0 >= 0xe0) { extra = 2; cp = b0 & 0x0fu; }
  else if (b0 >= 0xc0) { extra = 1; cp = b0 & 0x1fu; }
  if (i + extra >= s.size()) { ++i; return b0; }
  for (int k = 1; k <= extra; ++k) {
    const auto b = static_cast<unsigned char>(s[i + k]);
    if ((b & 0xc0u) != 0x80u) { ++i; return b0; }
    cp = (cp << 6) | (b & 0x3fu);
  }
  i += extra + 1;
  return cp;
}

inline void encode_utf8(std::uint32_t cp, std::string& out) {
  if (cp < 0x80) {
    out.push_back(static_cast<char>(cp));
  } else if (cp < 0x800) {
    out.push_back(static_cast<char>(0xc0 | (cp >> 6)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3f)));
  } else if (cp < 0x10000) {
    out.push_back(static_cast<char>(0xe0 | (cp >> 12)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3f)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3f)));
  } else {
    out.push_back(static_cast<char>(0xf0 | (cp >> 18)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 12) & 0x3f)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3f)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3f)));
  }
}

inline void strip_trailing_newline(std::string& line) {
  while (!line.empty() && (line.back() == '\r' || line.back() == '\n')) line.pop_back();
}

}  // namespace detail

// Splits on Unicode whitespace. No normalization is applied here.
inline std::vector<std::string> split_whitespace(const std::string& text) {
  std::vector<std::string> out;
  std::string cur;
  std::size_t i = 0;
  while (i < text.size()) {
    const std::size_t start = i;
    const std::uint32_t cp = detail::decode_utf8(text, i);
    if (detail::is_space_cp(cp)) {
      if (!cur.empty()) { out.push_back(cur); cur.clear(); }
    } else {
      cur.append(text, start, i - start);
    }
  }
  if (!cur.empty()) out.push_back(cur);
  return out;
}

// Lowercases (ASCII range), removes punctuation code points, and returns the
// empty string for tokens that consist of punctuation only.
inline std::string normalize_token(const std::string& token, bool lowercase) {
  std::string out;
  out.reserve(token.size());
  std::size_t i = 0;
  while (i < token.size()) {
    std::uint32_t cp = detail::decode_utf8(token, i);
    if (detail::is_punct_cp(cp)) continue;
    if (lowercase && cp >= 'A' && cp <= 'Z') cp += 'a' - 'A';
    detail::encode_utf8(cp, out);
  }
  return out;
}

inline std::vector<std::string> preprocess_text(const std::string& text, const PreprocessConfig& cfg) {
  std::vector<std::string> out;
  for (const auto& tok : split_whitespace(text)) {
    std::string norm = normalize_token(tok, cfg.lowercase);
    if (norm.empty()) continue;
    if (cfg.stopwords.count(norm)) continue;
    out.push_back(std::move(norm));
  }
  return out;
}

// Tokens are always derived from the raw text, so applying this twice gives
// the same result as applying it once.
inline Document preprocess(const Document& doc, const PreprocessConfig& cfg) {
  Document out;
  out.id = doc.id;
  out.raw = doc.raw;
  out.tokens = preprocess_text(doc.raw, cfg);
  return out;
}

inline Corpus preprocess(const Corpus& corpus, const PreprocessConfig& cfg) {
  Corpus out = corpus;
  for (auto& d : out.docs) d.tokens = preprocess_text(d.raw, cfg);
  return out;
}

namespace detail {

// First-appearance dense re-indexing of label strings.
inline std::vector<int> remap_labels(const std::vector<std::string>& raw_labels,
                                     std::vector<std::string>& names) {
  std::unordered_map<std::string, int> ids;
  std::vector<int> out;
  out.reserve(raw_labels.size());
  for (const auto& s : raw_labels) {
    auto [it, inserted] = ids.emplace(s, static_cast<int>(names.size()));
    if (inserted) names.push_back(s);
    out.push_back(it->second);
  }
  return out;
}

}  // namespace detail

// Loads a corpus. For tsv_label_text each non-empty line is `label<TAB>text`.
// For text_lines each non-empty line is a text; labels_path, when given,
// names a parallel file with one label per line (one per non-empty text).
// Documents are not preprocessed here.
inline Corpus load_corpus(const std::string& path, CorpusFormat format,
                          const std::optional<std::string>& labels_path = std::nullopt) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open corpus file: " + path);

  Corpus corpus;
  std::vector<std::string> raw_labels;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    detail::strip_trailing_newline(line);
    if (line.empty()) continue;
    Document doc;
    doc.id = corpus.n();
    if (format == CorpusFormat::tsv_label_text) {
      const auto tab = line.find('\t');
      if (tab == std::string::npos) {
        throw std::runtime_error(path + " line " + std::to_string(line_no) +
                                 ": missing tab separator");
      }
      raw_labels.push_back(line.substr(0, tab));
      doc.raw = line.substr(tab + 1);
    } else {
      doc.raw = line;
    }
    doc.tokens = split_whitespace(doc.raw);
    corpus.docs.push_back(std::move(doc));
  }
  if (corpus.docs.empty()) throw std::runtime_error("empty corpus: " + path);

  if (format == CorpusFormat::tsv_label_text) {
    corpus.gold = detail::remap_labels(raw_labels, corpus.label_names);
  } else if (labels_path) {
    std::ifstream lin(*labels_path);
    if (!lin) throw std::runtime_error("cannot open label file: " + *labels_path);
    std::vector<std::string> labels;
    while (std::getline(lin, line)) {
      detail::strip_trailing_newline(line);
      if (line.empty()) continue;
      labels.push_back(line);
    }
    if (static_cast<int>(labels.size()) != corpus.n()) {
      throw std::runtime_error("label file length mismatch: " + std::to_string(labels.size()) +
                               " labels for " + std::to_string(corpus.n()) + " texts");
    }
    corpus.gold = detail::remap_labels(labels, corpus.label_names);
  }
  return corpus;
}

inline void save_corpus_tsv(const Corpus& corpus, const std::string& path) {
  if (!corpus.gold) throw std::runtime_error("save_corpus_tsv: corpus has no labels");
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write corpus file: " + path);
  for (int i = 0; i < corpus.n(); ++i) {
    out << corpus.label_names[(*corpus.gold)[i]] << '\t' << corpus.docs[i].raw << '\n';
  }
}

}  // namespace stck
