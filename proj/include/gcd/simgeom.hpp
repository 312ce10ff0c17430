#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "gcd/core.hpp"
#include "gcd/parallel.hpp"

namespace gcd {

/// Dense symmetric cosine-similarity matrix.
class SimilarityMatrix {
 public:
  SimilarityMatrix() = default;
  explicit SimilarityMatrix(std::size_t n) : n_(n), values_(n * n, 0.0) {}

  std::size_t size() const { return n_; }
  double operator()(std::size_t i, std::size_t j) const { return values_[i * n_ + j]; }
  double& operator()(std::size_t i, std::size_t j) { return values_[i * n_ + j]; }
  std::span<const double> row(std::size_t i) const { return {values_.data() + i * n_, n_}; }
  std::span<const double> values() const { return values_; }

  bool operator==(const SimilarityMatrix&) const = default;

 private:
  std::size_t n_ = 0;
  std::vector<double> values_;
};

double dot(std::span<const double> a, std::span<const double> b);
double l2_norm(std::span<const double> a);

/// (a.b)/(|a||b|) clamped to [-1, 1]. Throws NumericError on a zero vector
/// and DataError on a dimension mismatch.
double cosine_similarity(std::span<const double> a, std::span<const double> b);

/// Row L2 norms; throws NumericError naming the first zero row.
std::vector<double> row_norms(const EmbeddingMatrix& e);

SimilarityMatrix similarity_matrix(const EmbeddingMatrix& e, Exec exec = Exec::Parallel);

/// Candidates sorted by similarity to `anchor`, ascending, ties by index.
std::vector<std::size_t> rank_ascending(std::size_t anchor,
                                        std::span<const std::size_t> candidates,
                                        const SimilarityMatrix& s);

}  // namespace gcd
