#include "gcd/simgeom.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace gcd {

int max_threads() {
#ifdef _OPENMP
  return omp_get_max_threads();
#else
  return 1;
#endif
}

double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) s += a[k] * b[k];
  return s;
}

double l2_norm(std::span<const double> a) { return std::sqrt(dot(a, a)); }

namespace {

double clamp_unit(double v) { return std::clamp(v, -1.0, 1.0); }

}  // namespace

double cosine_similarity(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) {
    throw DataError("cosine_similarity: dimension mismatch " + std::to_string(a.size()) +
                    " vs " + std::to_string(b.size()));
  }
  const double na = l2_norm(a);
  const double nb = l2_norm(b);
  if (na == 0.0 || nb == 0.0) {
    throw NumericError("cosine_similarity: zero vector has no direction");
  }
  return clamp_unit(dot(a, b) / (na * nb));
}

std::vector<double> row_norms(const EmbeddingMatrix& e) {
  std::vector<double> norms(e.rows());
  for (std::size_t i = 0; i < e.rows(); ++i) {
    norms[i] = l2_norm(e.row(i));
    if (norms[i] == 0.0) {
      throw NumericError("zero embedding row " + std::to_string(i) +
                         ": cosine similarity undefined");
    }
  }
  return norms;
}

SimilarityMatrix similarity_matrix(const EmbeddingMatrix& e, Exec exec) {
  const auto norms = row_norms(e);
  const std::size_t n = e.rows();
  SimilarityMatrix s(n);
  // Row i owns the upper-triangle cells (i, j>i) and their mirrors (j, i).
  for_each_index_dynamic(n, exec, [&](std::size_t i) {
    s(i, i) = 1.0;
    const auto zi = e.row(i);
    for (std::size_t j = i + 1; j < n; ++j) {
      const double v = clamp_unit(dot(zi, e.row(j)) / (norms[i] * norms[j]));
      s(i, j) = v;
      s(j, i) = v;
    }
  });
  return s;
}

std::vector<std::size_t> rank_ascending(std::size_t anchor,
                                        std::span<const std::size_t> candidates,
                                        const SimilarityMatrix& s) {
  std::vector<std::size_t> order(candidates.begin(), candidates.end());
  for (std::size_t c : order) {
    if (c == anchor) throw DataError("rank_ascending: anchor listed among candidates");
    if (c >= s.size()) throw DataError("rank_ascending: candidate index out of range");
  }
  const auto row = s.row(anchor);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (row[a] != row[b]) return row[a] < row[b];
    return a < b;
  });
  return order;
}

}  // namespace gcd
