#pragma once

// Test-only helpers and independent oracles. Nothing here calls into the
// code path it is used to check.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <numeric>
#include <random>
#include <set>
#include <string>
#include <vector>

#include <unistd.h>

#include "gcd/core.hpp"

namespace gcd::test {

inline EmbeddingMatrix random_matrix(std::size_t rows, std::size_t dim, std::mt19937_64& rng,
                                     double lo = -1.0, double hi = 1.0) {
  std::uniform_real_distribution<double> u(lo, hi);
  EmbeddingMatrix m(rows, dim);
  for (double& v : m.values()) v = u(rng);
  return m;
}

inline double naive_cosine(const std::vector<double>& a, const std::vector<double>& b) {
  double ab = 0, aa = 0, bb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    ab += a[i] * b[i];
    aa += a[i] * a[i];
    bb += b[i] * b[i];
  }
  return ab / std::sqrt(aa * bb);
}

inline std::vector<double> row_vec(const EmbeddingMatrix& m, std::size_t i) {
  auto r = m.row(i);
  return {r.begin(), r.end()};
}

/// Relative error with an absolute floor in the denominator.
inline double rel_error(double a, double b, double floor = 1e-6) {
  return std::abs(a - b) / std::max({std::abs(a), std::abs(b), floor});
}

/// Central-difference gradient of f with respect to every entry of z.
inline EmbeddingMatrix numeric_gradient(const std::function<double(const EmbeddingMatrix&)>& f,
                                        const EmbeddingMatrix& z, double step = 1e-5) {
  EmbeddingMatrix g(z.rows(), z.dim());
  EmbeddingMatrix probe = z;
  for (std::size_t i = 0; i < z.values().size(); ++i) {
    const double orig = probe.values()[i];
    probe.values()[i] = orig + step;
    const double up = f(probe);
    probe.values()[i] = orig - step;
    const double down = f(probe);
    probe.values()[i] = orig;
    g.values()[i] = (up - down) / (2.0 * step);
  }
  return g;
}

inline double max_rel_error(const EmbeddingMatrix& a, const EmbeddingMatrix& b,
                            double floor = 1e-6) {
  double worst = 0.0;
  for (std::size_t i = 0; i < a.values().size(); ++i) {
    worst = std::max(worst, rel_error(a.values()[i], b.values()[i], floor));
  }
  return worst;
}

/// Best accuracy over every injective relabelling of predicted clusters onto
/// classes, by exhaustive permutation of the padded label set.
inline double brute_force_accuracy(const std::vector<int>& pred, const std::vector<int>& truth) {
  std::vector<int> clusters(pred), classes(truth);
  std::sort(clusters.begin(), clusters.end());
  clusters.erase(std::unique(clusters.begin(), clusters.end()), clusters.end());
  std::sort(classes.begin(), classes.end());
  classes.erase(std::unique(classes.begin(), classes.end()), classes.end());
  const std::size_t m = std::max(clusters.size(), classes.size());
  std::vector<std::size_t> perm(m);
  std::iota(perm.begin(), perm.end(), std::size_t{0});
  std::size_t best = 0;
  do {
    std::size_t hits = 0;
    for (std::size_t i = 0; i < pred.size(); ++i) {
      const auto ci = static_cast<std::size_t>(
          std::lower_bound(clusters.begin(), clusters.end(), pred[i]) - clusters.begin());
      const std::size_t target = perm[ci];
      if (target < classes.size() && classes[target] == truth[i]) ++hits;
    }
    best = std::max(best, hits);
  } while (std::next_permutation(perm.begin(), perm.end()));
  return static_cast<double>(best) / static_cast<double>(pred.size());
}

/// Pair-counting ARI from all n(n-1)/2 sample pairs.
inline double pair_counting_ari(const std::vector<int>& a, const std::vector<int>& b) {
  const std::size_t n = a.size();
  double both = 0, only_a = 0, only_b = 0, total = 0;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      const bool sa = a[i] == a[j], sb = b[i] == b[j];
      both += sa && sb;
      only_a += sa;
      only_b += sb;
      total += 1;
    }
  }
  const double expected = only_a * only_b / total;
  const double maxv = 0.5 * (only_a + only_b);
  return (both - expected) / (maxv - expected);
}

inline std::vector<int> random_labels(std::size_t n, int k, std::mt19937_64& rng) {
  std::uniform_int_distribution<int> u(0, k - 1);
  std::vector<int> v(n);
  for (int& x : v) x = u(rng);
  return v;
}

inline std::vector<int> relabel(const std::vector<int>& v, std::mt19937_64& rng) {
  std::vector<int> ids(v);
  std::sort(ids.begin(), ids.end());
  ids.erase(std::unique(ids.begin(), ids.end()), ids.end());
  std::vector<int> perm(ids.size());
  std::iota(perm.begin(), perm.end(), 100);
  std::shuffle(perm.begin(), perm.end(), rng);
  std::vector<int> out(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) {
    const auto k = std::lower_bound(ids.begin(), ids.end(), v[i]) - ids.begin();
    out[i] = perm[static_cast<std::size_t>(k)];
  }
  return out;
}

/// Training set with `n_sources` sources of `clips` clips each; every source
/// gets the class `source % n_classes`, labelled when that class is below
/// `n_labelled_classes`.
inline TrainingSet grouped_training_set(std::size_t n_sources, std::size_t clips,
                                        int n_classes, int n_labelled_classes, std::size_t dim,
                                        std::mt19937_64& rng) {
  TrainingSet t;
  t.features = random_matrix(n_sources * clips, dim, rng);
  for (std::size_t s = 0; s < n_sources; ++s) {
    const int cls = static_cast<int>(s % static_cast<std::size_t>(n_classes));
    for (std::size_t c = 0; c < clips; ++c) {
      TrainingSample smp;
      smp.source_id = "s" + std::to_string(s);
      if (cls < n_labelled_classes) {
        smp.split = Split::Labelled;
        smp.label = cls;
      }
      t.samples.push_back(smp);
    }
  }
  return t;
}

/// Fresh scratch directory, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    static int counter = 0;
    path_ = std::filesystem::temp_directory_path() /
            ("gcd_test_" + tag + "_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }
  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
};

}  // namespace gcd::test
