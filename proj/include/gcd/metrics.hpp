#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <span>
#include <vector>

#include "gcd/core.hpp"
#include "gcd/parallel.hpp"

namespace gcd {

struct HungarianResult {
  std::vector<int> col_of_row;  // -1 where the row was matched to padding
  double total = 0.0;
};

/// Maximum-weight assignment on a rectangular matrix (the smaller side is
/// zero-padded). Exact; O(m^3) with m = max(rows, cols).
HungarianResult hungarian_max_assignment(const std::vector<std::vector<double>>& weights);

/// Rows are predicted clusters, columns ground-truth classes, both in
/// ascending id order.
struct ContingencyTable {
  std::vector<int> clusters;
  std::vector<int> classes;
  std::vector<std::vector<std::int64_t>> counts;
  std::size_t n = 0;
};

ContingencyTable contingency(std::span<const int> pred, std::span<const int> truth);

struct ClusterClassMap {
  std::map<int, int> class_of_cluster;  // unmatched clusters are absent
  std::int64_t matched = 0;             // samples on matched (cluster, class) cells
};

ClusterClassMap match_clusters(std::span<const int> pred, std::span<const int> truth);

double clustering_accuracy(std::span<const int> pred, std::span<const int> truth);

/// Mutual information over the arithmetic mean of the two entropies; 0 when
/// both entropies vanish.
double nmi(std::span<const int> pred, std::span<const int> truth);

double ari(std::span<const int> pred, std::span<const int> truth);

/// Mean Euclidean silhouette; samples in singleton clusters score 0.
/// Throws DataError when fewer than two clusters are present.
double silhouette(const EmbeddingMatrix& z, std::span<const int> labels,
                  Exec exec = Exec::Parallel);

struct SubsetCounts {
  std::int64_t correct = 0;
  std::int64_t total = 0;
};

struct SubsetReport {
  MetricReport metrics;
  SubsetCounts all, new_classes, old_classes;
  ClusterClassMap map;
};

/// Old/New/All report under one cluster-to-class map matched on All. Old is
/// the labelled split and New the unlabelled one. `embeddings` feeds the
/// silhouette; pass the matrix the clusterer saw.
SubsetReport subset_report(const Assignment& pred, const Dataset& d,
                           const EmbeddingMatrix& embeddings, Exec exec = Exec::Parallel);

}  // namespace gcd
