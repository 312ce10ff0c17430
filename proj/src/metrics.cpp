#include "gcd/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace gcd {

namespace {

void check_lengths(std::span<const int> pred, std::span<const int> truth) {
  if (pred.size() != truth.size()) {
    throw DataError("prediction has " + std::to_string(pred.size()) + " entries but truth has " +
                    std::to_string(truth.size()));
  }
}

std::vector<int> sorted_unique(std::span<const int> v) {
  std::vector<int> u(v.begin(), v.end());
  std::sort(u.begin(), u.end());
  u.erase(std::unique(u.begin(), u.end()), u.end());
  return u;
}

std::size_t index_of(const std::vector<int>& ids, int v) {
  return static_cast<std::size_t>(std::lower_bound(ids.begin(), ids.end(), v) - ids.begin());
}

double comb2(std::int64_t x) { return static_cast<double>(x) * static_cast<double>(x - 1) / 2.0; }

}  // namespace

HungarianResult hungarian_max_assignment(const std::vector<std::vector<double>>& weights) {
  const std::size_t rows = weights.size();
  if (rows == 0 || weights[0].empty()) throw DataError("hungarian: empty weight matrix");
  const std::size_t cols = weights[0].size();
  for (const auto& r : weights) {
    if (r.size() != cols) throw DataError("hungarian: ragged weight matrix");
    for (double w : r) {
      if (!std::isfinite(w)) throw NumericError("hungarian: non-finite weight");
    }
  }
  const std::size_t m = std::max(rows, cols);
  auto cost = [&](std::size_t i, std::size_t j) {
    return (i < rows && j < cols) ? -weights[i][j] : 0.0;
  };

  // Shortest augmenting paths with dual potentials, 1-based with a dummy 0.
  const double inf = std::numeric_limits<double>::infinity();
  std::vector<double> u(m + 1, 0.0), v(m + 1, 0.0);
  std::vector<std::size_t> row_of_col(m + 1, 0), way(m + 1, 0);
  for (std::size_t i = 1; i <= m; ++i) {
    row_of_col[0] = i;
    std::size_t j0 = 0;
    std::vector<double> minv(m + 1, inf);
    std::vector<char> used(m + 1, 0);
    do {
      used[j0] = 1;
      const std::size_t i0 = row_of_col[j0];
      double delta = inf;
      std::size_t j1 = 0;
      for (std::size_t j = 1; j <= m; ++j) {
        if (used[j]) continue;
        const double cur = cost(i0 - 1, j - 1) - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (std::size_t j = 0; j <= m; ++j) {
        if (used[j]) {
          u[row_of_col[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (row_of_col[j0] != 0);
    do {
      const std::size_t j1 = way[j0];
      row_of_col[j0] = row_of_col[j1];
      j0 = j1;
    } while (j0 != 0);
  }

  HungarianResult out;
  out.col_of_row.assign(rows, -1);
  for (std::size_t j = 1; j <= m; ++j) {
    const std::size_t i = row_of_col[j];
    if (i >= 1 && i <= rows && j <= cols) {
      out.col_of_row[i - 1] = static_cast<int>(j - 1);
      out.total += weights[i - 1][j - 1];
    }
  }
  return out;
}

ContingencyTable contingency(std::span<const int> pred, std::span<const int> truth) {
  check_lengths(pred, truth);
  ContingencyTable t;
  t.clusters = sorted_unique(pred);
  t.classes = sorted_unique(truth);
  t.counts.assign(t.clusters.size(), std::vector<std::int64_t>(t.classes.size(), 0));
  for (std::size_t i = 0; i < pred.size(); ++i) {
    ++t.counts[index_of(t.clusters, pred[i])][index_of(t.classes, truth[i])];
  }
  t.n = pred.size();
  return t;
}

ClusterClassMap match_clusters(std::span<const int> pred, std::span<const int> truth) {
  const auto t = contingency(pred, truth);
  ClusterClassMap out;
  if (t.n == 0) return out;
  std::vector<std::vector<double>> w(t.clusters.size(), std::vector<double>(t.classes.size()));
  for (std::size_t r = 0; r < t.clusters.size(); ++r) {
    for (std::size_t c = 0; c < t.classes.size(); ++c) w[r][c] = static_cast<double>(t.counts[r][c]);
  }
  const auto h = hungarian_max_assignment(w);
  for (std::size_t r = 0; r < t.clusters.size(); ++r) {
    const int c = h.col_of_row[r];
    if (c < 0) continue;
    out.class_of_cluster[t.clusters[r]] = t.classes[static_cast<std::size_t>(c)];
    out.matched += t.counts[r][static_cast<std::size_t>(c)];
  }
  return out;
}

double clustering_accuracy(std::span<const int> pred, std::span<const int> truth) {
  check_lengths(pred, truth);
  if (pred.empty()) throw DataError("clustering_accuracy: no samples");
  const auto m = match_clusters(pred, truth);
  return static_cast<double>(m.matched) / static_cast<double>(pred.size());
}

double nmi(std::span<const int> pred, std::span<const int> truth) {
  const auto t = contingency(pred, truth);
  if (t.n == 0) throw DataError("nmi: no samples");
  const double n = static_cast<double>(t.n);
  std::vector<double> a(t.clusters.size(), 0.0), b(t.classes.size(), 0.0);
  for (std::size_t r = 0; r < a.size(); ++r) {
    for (std::size_t c = 0; c < b.size(); ++c) {
      a[r] += static_cast<double>(t.counts[r][c]);
      b[c] += static_cast<double>(t.counts[r][c]);
    }
  }
  auto entropy = [n](const std::vector<double>& m) {
    double h = 0.0;
    for (double x : m) {
      if (x > 0.0) h -= (x / n) * std::log(x / n);
    }
    return h;
  };
  double mi = 0.0;
  for (std::size_t r = 0; r < a.size(); ++r) {
    for (std::size_t c = 0; c < b.size(); ++c) {
      const double nij = static_cast<double>(t.counts[r][c]);
      if (nij > 0.0) mi += (nij / n) * std::log(n * nij / (a[r] * b[c]));
    }
  }
  const double denom = 0.5 * (entropy(a) + entropy(b));
  if (denom <= 0.0) return 0.0;
  return std::clamp(mi / denom, 0.0, 1.0);
}

double ari(std::span<const int> pred, std::span<const int> truth) {
  const auto t = contingency(pred, truth);
  if (t.n < 2) throw DataError("ari: needs at least two samples");
  double index = 0.0, sum_a = 0.0, sum_b = 0.0;
  std::vector<std::int64_t> b(t.classes.size(), 0);
  for (std::size_t r = 0; r < t.clusters.size(); ++r) {
    std::int64_t a = 0;
    for (std::size_t c = 0; c < t.classes.size(); ++c) {
      index += comb2(t.counts[r][c]);
      a += t.counts[r][c];
      b[c] += t.counts[r][c];
    }
    sum_a += comb2(a);
  }
  for (std::int64_t x : b) sum_b += comb2(x);
  const double expected = sum_a * sum_b / comb2(static_cast<std::int64_t>(t.n));
  const double max_index = 0.5 * (sum_a + sum_b);
  const double denom = max_index - expected;
  // Both partitions trivial in the same way (all singletons or one block).
  if (denom == 0.0) return 1.0;
  return (index - expected) / denom;
}

double silhouette(const EmbeddingMatrix& z, std::span<const int> labels, Exec exec) {
  if (labels.size() != z.rows()) {
    throw DataError("silhouette: " + std::to_string(labels.size()) + " labels for " +
                    std::to_string(z.rows()) + " rows");
  }
  const auto ids = sorted_unique(labels);
  if (ids.size() < 2) throw DataError("silhouette: undefined for fewer than two clusters");
  const std::size_t n = z.rows(), k = ids.size();
  std::vector<std::size_t> dense(n), size(k, 0);
  for (std::size_t i = 0; i < n; ++i) {
    dense[i] = index_of(ids, labels[i]);
    ++size[dense[i]];
  }

  std::vector<double> score(n, 0.0);
  for_each_index(n, exec, [&](std::size_t i) {
    const std::size_t own = dense[i];
    if (size[own] < 2) return;
    std::vector<double> sum(k, 0.0);
    const auto zi = z.row(i);
    for (std::size_t j = 0; j < n; ++j) {
      if (j == i) continue;
      const auto zj = z.row(j);
      double s = 0.0;
      for (std::size_t t = 0; t < zi.size(); ++t) {
        const double d = zi[t] - zj[t];
        s += d * d;
      }
      sum[dense[j]] += std::sqrt(s);
    }
    const double a = sum[own] / static_cast<double>(size[own] - 1);
    double b = std::numeric_limits<double>::infinity();
    for (std::size_t c = 0; c < k; ++c) {
      if (c != own) b = std::min(b, sum[c] / static_cast<double>(size[c]));
    }
    const double m = std::max(a, b);
    score[i] = m > 0.0 ? (b - a) / m : 0.0;
  });
  double total = 0.0;
  for (double s : score) total += s;
  return total / static_cast<double>(n);
}

namespace {

SubsetMetrics subset_metrics(const std::vector<std::size_t>& idx, const std::vector<int>& pred,
                             const std::vector<int>& truth, const ClusterClassMap& map,
                             const EmbeddingMatrix& z, SubsetCounts& counts, Exec exec) {
  SubsetMetrics m;
  m.n_samples = idx.size();
  counts.total = static_cast<std::int64_t>(idx.size());
  if (idx.empty()) return m;

  std::vector<int> p, t;
  p.reserve(idx.size());
  t.reserve(idx.size());
  for (std::size_t i : idx) {
    p.push_back(pred[i]);
    t.push_back(truth[i]);
    auto it = map.class_of_cluster.find(pred[i]);
    if (it != map.class_of_cluster.end() && it->second == truth[i]) ++counts.correct;
  }
  m.acc = static_cast<double>(counts.correct) / static_cast<double>(counts.total);
  m.nmi = nmi(p, t);
  m.ari = idx.size() >= 2 ? ari(p, t) : 0.0;
  if (sorted_unique(p).size() >= 2) {
    m.silhouette = silhouette(z.select_rows(idx), p, exec);
    m.silhouette_defined = true;
  }
  return m;
}

}  // namespace

SubsetReport subset_report(const Assignment& pred, const Dataset& d,
                           const EmbeddingMatrix& embeddings, Exec exec) {
  const std::size_t n = d.size();
  if (pred.size() != n) {
    throw DataError("assignment has " + std::to_string(pred.size()) + " entries but dataset has " +
                    std::to_string(n) + " samples");
  }
  if (embeddings.rows() != n) {
    throw DataError("embeddings have " + std::to_string(embeddings.rows()) +
                    " rows but dataset has " + std::to_string(n) + " samples");
  }
  std::vector<int> truth(n);
  std::vector<std::size_t> all, old_idx, new_idx;
  for (std::size_t i = 0; i < n; ++i) {
    const auto gt = d.meta[i].ground_truth();
    if (!gt) {
      throw DataError("sample " + std::to_string(i) + " ('" + d.meta[i].sample_id +
                      "') has no ground truth for evaluation");
    }
    truth[i] = *gt;
    all.push_back(i);
    (d.meta[i].split == Split::Labelled ? old_idx : new_idx).push_back(i);
  }

  SubsetReport r;
  r.map = match_clusters(pred.cluster_of, truth);
  r.metrics.all = subset_metrics(all, pred.cluster_of, truth, r.map, embeddings, r.all, exec);
  r.metrics.old_classes =
      subset_metrics(old_idx, pred.cluster_of, truth, r.map, embeddings, r.old_classes, exec);
  r.metrics.new_classes =
      subset_metrics(new_idx, pred.cluster_of, truth, r.map, embeddings, r.new_classes, exec);
  return r;
}

}  // namespace gcd
