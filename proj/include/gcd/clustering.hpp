#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "gcd/core.hpp"
#include "gcd/parallel.hpp"

namespace gcd {

struct KMeansOptions {
  std::size_t k = 2;
  std::uint64_t seed = 0;
  std::size_t max_iter = 300;
  std::size_t n_restarts = 10;
};

struct KMeansResult {
  Assignment assignment;
  EmbeddingMatrix centroids;          // k x dim
  double inertia = 0.0;               // sum of squared distances to own centroid
  std::size_t iterations = 0;
  std::size_t best_restart = 0;
  std::vector<double> inertia_trace;  // one entry per assignment step of the best restart
};

/// k-means++ seeding followed by Lloyd iterations until the assignment stops
/// changing or max_iter is hit; the restart with the lowest inertia wins
/// (ties go to the lower restart index). Euclidean distance on the raw rows.
/// A cluster that empties is re-seeded at the point farthest from its
/// current centroid.
KMeansResult kmeans(const EmbeddingMatrix& z, const KMeansOptions& opt,
                    Exec exec = Exec::Parallel);

/// Connected components of the graph with an edge wherever cosine
/// similarity >= delta. Cluster ids follow first appearance by sample index.
Assignment threshold_cluster(const EmbeddingMatrix& z, double delta, Exec exec = Exec::Parallel);

}  // namespace gcd
