#include "gcd/clustering.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>
#include <string>

#include "gcd/simgeom.hpp"

namespace gcd {

namespace {

double squared_distance(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t j = 0; j < a.size(); ++j) {
    const double t = a[j] - b[j];
    s += t * t;
  }
  return s;
}

std::mt19937_64 restart_rng(std::uint64_t seed, std::size_t restart) {
  const auto r = static_cast<std::uint64_t>(restart);
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(r), static_cast<std::uint32_t>(r >> 32), 0x6b6du};
  return std::mt19937_64(seq);
}

EmbeddingMatrix seed_plus_plus(const EmbeddingMatrix& z, std::size_t k, std::mt19937_64& rng,
                               Exec exec) {
  const std::size_t n = z.rows();
  EmbeddingMatrix centroids(k, z.dim());
  std::uniform_int_distribution<std::size_t> first(0, n - 1);
  std::size_t pick = first(rng);
  std::copy(z.row(pick).begin(), z.row(pick).end(), centroids.row(0).begin());

  std::vector<double> d2(n, std::numeric_limits<double>::infinity());
  for (std::size_t c = 1; c < k; ++c) {
    const auto prev = centroids.row(c - 1);
    for_each_index(n, exec, [&](std::size_t i) {
      d2[i] = std::min(d2[i], squared_distance(z.row(i), prev));
    });
    double total = 0.0;
    for (double v : d2) total += v;
    if (total > 0.0) {
      std::uniform_real_distribution<double> u(0.0, total);
      double target = u(rng);
      pick = n - 1;
      for (std::size_t i = 0; i < n; ++i) {
        target -= d2[i];
        if (target < 0.0 && d2[i] > 0.0) {
          pick = i;
          break;
        }
      }
    } else {
      pick = first(rng);  // every point coincides with a chosen centroid
    }
    std::copy(z.row(pick).begin(), z.row(pick).end(), centroids.row(c).begin());
  }
  return centroids;
}

KMeansResult lloyd(const EmbeddingMatrix& z, EmbeddingMatrix centroids, std::size_t max_iter,
                   Exec exec) {
  const std::size_t n = z.rows(), k = centroids.rows(), dim = z.dim();
  std::vector<int> assign(n, -1), prev;
  std::vector<double> dist(n);
  KMeansResult res;

  for (std::size_t it = 0; it < max_iter; ++it) {
    prev = assign;
    for_each_index(n, exec, [&](std::size_t i) {
      const auto x = z.row(i);
      double best = std::numeric_limits<double>::infinity();
      int arg = 0;
      for (std::size_t c = 0; c < k; ++c) {
        const double d = squared_distance(x, centroids.row(c));
        if (d < best) {
          best = d;
          arg = static_cast<int>(c);
        }
      }
      assign[i] = arg;
      dist[i] = best;
    });

    std::vector<std::size_t> counts(k, 0);
    for (int a : assign) ++counts[static_cast<std::size_t>(a)];
    for (std::size_t c = 0; c < k; ++c) {
      if (counts[c] > 0) continue;
      // Farthest point among clusters that can spare one.
      std::size_t far = n;
      for (std::size_t i = 0; i < n; ++i) {
        if (counts[static_cast<std::size_t>(assign[i])] < 2) continue;
        if (far == n || dist[i] > dist[far]) far = i;
      }
      if (far == n) break;
      --counts[static_cast<std::size_t>(assign[far])];
      ++counts[c];
      assign[far] = static_cast<int>(c);
      dist[far] = 0.0;
      std::copy(z.row(far).begin(), z.row(far).end(), centroids.row(c).begin());
    }

    double inertia = 0.0;
    for (double d : dist) inertia += d;
    res.inertia_trace.push_back(inertia);
    res.iterations = it + 1;
    if (assign == prev || it + 1 == max_iter) break;

    EmbeddingMatrix sums(k, dim);
    for (std::size_t i = 0; i < n; ++i) {
      auto srow = sums.row(static_cast<std::size_t>(assign[i]));
      const auto x = z.row(i);
      for (std::size_t j = 0; j < dim; ++j) srow[j] += x[j];
    }
    for (std::size_t c = 0; c < k; ++c) {
      if (counts[c] == 0) continue;
      const double inv = 1.0 / static_cast<double>(counts[c]);
      auto crow = centroids.row(c);
      const auto srow = sums.row(c);
      for (std::size_t j = 0; j < dim; ++j) crow[j] = srow[j] * inv;
    }
  }

  res.assignment.cluster_of = std::move(assign);
  res.assignment.n_clusters = static_cast<int>(k);
  res.centroids = std::move(centroids);
  res.inertia = res.inertia_trace.back();
  return res;
}

}  // namespace

KMeansResult kmeans(const EmbeddingMatrix& z, const KMeansOptions& opt, Exec exec) {
  const std::size_t n = z.rows();
  if (opt.k == 0) throw UsageError("kmeans: k must be >= 1");
  if (opt.k > n) {
    throw DataError("kmeans: k=" + std::to_string(opt.k) + " exceeds sample count " +
                    std::to_string(n));
  }
  if (opt.max_iter == 0 || opt.n_restarts == 0) {
    throw UsageError("kmeans: max_iter and n_restarts must be >= 1");
  }
  if (!z.all_finite()) throw NumericError("kmeans: non-finite embedding values");

  KMeansResult best;
  for (std::size_t r = 0; r < opt.n_restarts; ++r) {
    auto rng = restart_rng(opt.seed, r);
    auto res = lloyd(z, seed_plus_plus(z, opt.k, rng, exec), opt.max_iter, exec);
    res.best_restart = r;
    if (r == 0 || res.inertia < best.inertia) best = std::move(res);
  }
  return best;
}

Assignment threshold_cluster(const EmbeddingMatrix& z, double delta, Exec exec) {
  const std::size_t n = z.rows();
  const auto norms = row_norms(z);

  std::vector<std::vector<std::size_t>> edges(n);
  for_each_index_dynamic(n, exec, [&](std::size_t i) {
    const auto zi = z.row(i);
    for (std::size_t j = i + 1; j < n; ++j) {
      const double s = std::clamp(dot(zi, z.row(j)) / (norms[i] * norms[j]), -1.0, 1.0);
      if (s >= delta) edges[i].push_back(j);
    }
  });

  std::vector<std::size_t> parent(n);
  std::iota(parent.begin(), parent.end(), std::size_t{0});
  auto find = [&](std::size_t x) {
    while (parent[x] != x) {
      parent[x] = parent[parent[x]];
      x = parent[x];
    }
    return x;
  };
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j : edges[i]) {
      const std::size_t a = find(i), b = find(j);
      if (a != b) parent[std::max(a, b)] = std::min(a, b);
    }
  }

  Assignment out;
  out.cluster_of.assign(n, -1);
  std::vector<int> id_of_root(n, -1);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t r = find(i);
    if (id_of_root[r] < 0) id_of_root[r] = out.n_clusters++;
    out.cluster_of[i] = id_of_root[r];
  }
  return out;
}

}  // namespace gcd
