#pragma once

// Shared helpers for the test suites.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>

#include "stck/matrix.hpp"
#include "stck/rng.hpp"
#include "stck/similarity.hpp"

namespace testutil {

// Unique temp file path; files are left behind for post-mortem inspection.
inline std::string temp_path(const std::string& tag) {
  static int counter = 0;
  const auto dir = std::filesystem::temp_directory_path() / "stck_tests";
  std::filesystem::create_directories(dir);
  return (dir / (tag + "_" + std::to_string(counter++) + ".tmp")).string();
}

inline std::string write_file(const std::string& tag, const std::string& content) {
  const auto path = temp_path(tag);
  std::ofstream out(path);
  out << content;
  return path;
}

inline std::string read_file(const std::string& path) {
  std::ifstream in(path);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

// Random symmetric similarity matrix with unit diagonal, entries in [-1, 1].
inline stck::SimMatrix random_sim_matrix(int n, stck::Rng& rng) {
  stck::SimMatrix s(n);
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) {
      const double v = rng.uniform(-1.0, 1.0);
      s.at(i, j) = v;
      s.at(j, i) = v;
    }
  }
  return s;
}

inline stck::DenseMatrix random_dense(int rows, int cols, stck::Rng& rng, double scale = 1.0) {
  stck::DenseMatrix x(rows, cols);
  for (auto& v : x.data) v = scale * rng.normal();
  return x;
}

}  // namespace testutil
