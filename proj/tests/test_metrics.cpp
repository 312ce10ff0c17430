#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "gcd/metrics.hpp"
#include "support.hpp"

using namespace gcd;
using doctest::Approx;

namespace {

double brute_force_assignment(const std::vector<std::vector<double>>& w) {
  std::vector<std::size_t> perm(w.size());
  std::iota(perm.begin(), perm.end(), std::size_t{0});
  double best = -1e300;
  do {
    double s = 0.0;
    for (std::size_t i = 0; i < w.size(); ++i) s += w[i][perm[i]];
    best = std::max(best, s);
  } while (std::next_permutation(perm.begin(), perm.end()));
  return best;
}

double naive_silhouette(const EmbeddingMatrix& z, const std::vector<int>& lab) {
  const std::size_t n = z.rows();
  auto dist = [&](std::size_t i, std::size_t j) {
    double s = 0.0;
    for (std::size_t k = 0; k < z.dim(); ++k) s += (z(i, k) - z(j, k)) * (z(i, k) - z(j, k));
    return std::sqrt(s);
  };
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    std::map<int, std::pair<double, int>> per;
    for (std::size_t j = 0; j < n; ++j) {
      if (j == i) continue;
      auto& p = per[lab[j]];
      p.first += dist(i, j);
      p.second += 1;
    }
    if (per.find(lab[i]) == per.end()) continue;  // singleton
    const double a = per[lab[i]].first / per[lab[i]].second;
    double b = 1e300;
    for (const auto& [c, p] : per) {
      if (c != lab[i]) b = std::min(b, p.first / p.second);
    }
    total += (b - a) / std::max(a, b);
  }
  return total / static_cast<double>(n);
}

}  // namespace

TEST_SUITE("metrics") {
  TEST_CASE("hungarian small examples") {
    const auto diag = hungarian_max_assignment({{5, 0, 0}, {0, 5, 0}, {0, 0, 5}});
    CHECK(diag.col_of_row == std::vector<int>{0, 1, 2});
    CHECK(diag.total == 15.0);

    const auto swap = hungarian_max_assignment({{1, 2}, {2, 1}});
    CHECK(swap.col_of_row == std::vector<int>{1, 0});
    CHECK(swap.total == 4.0);

    CHECK_THROWS_AS(hungarian_max_assignment({}), DataError);
  }

  TEST_CASE("hungarian handles rectangular input") {
    const auto wide = hungarian_max_assignment({{1, 9, 3}});
    CHECK(wide.col_of_row == std::vector<int>{1});
    CHECK(wide.total == 9.0);

    const auto tall = hungarian_max_assignment({{1}, {7}, {3}});
    CHECK(tall.col_of_row == std::vector<int>{-1, 0, -1});
    CHECK(tall.total == 7.0);
  }

  TEST_CASE("hungarian equals exhaustive search on random 6x6 integer matrices") {
    std::mt19937_64 rng(1);
    std::uniform_int_distribution<int> u(0, 20);
    for (int t = 0; t < 200; ++t) {
      std::vector<std::vector<double>> w(6, std::vector<double>(6));
      for (auto& row : w) {
        for (double& v : row) v = u(rng);
      }
      const auto r = hungarian_max_assignment(w);
      CHECK(r.total == brute_force_assignment(w));
      double check = 0.0;
      std::vector<int> cols(r.col_of_row);
      for (std::size_t i = 0; i < 6; ++i) check += w[i][static_cast<std::size_t>(cols[i])];
      CHECK(check == r.total);
      std::sort(cols.begin(), cols.end());
      CHECK(std::unique(cols.begin(), cols.end()) == cols.end());
    }
  }

  TEST_CASE("contingency counts sum to n") {
    const std::vector<int> pred{3, 3, 1, 1, 1}, truth{0, 2, 2, 2, 0};
    const auto t = contingency(pred, truth);
    CHECK(t.clusters == std::vector<int>{1, 3});
    CHECK(t.classes == std::vector<int>{0, 2});
    CHECK(t.counts[0][0] == 1);
    CHECK(t.counts[0][1] == 2);
    CHECK(t.counts[1][0] == 1);
    CHECK(t.counts[1][1] == 1);
    CHECK(t.n == 5);
    CHECK_THROWS_AS(contingency(std::vector<int>{1}, std::vector<int>{1, 2}), DataError);
  }

  TEST_CASE("accuracy examples") {
    const std::vector<int> truth{0, 0, 1, 1, 2, 2};
    CHECK(clustering_accuracy(std::vector<int>{5, 5, 3, 3, 9, 9}, truth) == 1.0);
    const std::vector<int> halves{0, 0, 0, 0, 0, 1, 1, 1, 1, 1};
    CHECK(clustering_accuracy(std::vector<int>(10, 4), halves) == 0.5);
  }

  TEST_CASE("accuracy equals brute-force best permutation") {
    std::mt19937_64 rng(2);
    for (int t = 0; t < 200; ++t) {
      const int kp = 1 + static_cast<int>(rng() % 5), kt = 1 + static_cast<int>(rng() % 5);
      const auto pred = test::random_labels(20, kp, rng);
      const auto truth = test::random_labels(20, kt, rng);
      CHECK(clustering_accuracy(pred, truth) == test::brute_force_accuracy(pred, truth));
    }
  }

  TEST_CASE("nmi examples") {
    const std::vector<int> truth{0, 0, 1, 1, 2, 2};
    CHECK(nmi(truth, truth) == Approx(1.0).epsilon(1e-12));
    CHECK(nmi(std::vector<int>(6, 0), truth) == 0.0);
    CHECK(std::abs(nmi(std::vector<int>{0, 0, 1, 1}, std::vector<int>{0, 1, 0, 1})) < 1e-15);
    CHECK(nmi(std::vector<int>(4, 1), std::vector<int>(4, 2)) == 0.0);

    // pred {0,0,1,1} vs truth {0,0,0,1}, entropies and MI written out by hand.
    const double hp = std::log(2.0);
    const double ht = -(0.75 * std::log(0.75) + 0.25 * std::log(0.25));
    const double mi = 0.5 * std::log(4.0 / 3.0) + 0.25 * std::log(2.0 / 3.0) + 0.25 * std::log(2.0);
    CHECK(nmi(std::vector<int>{0, 0, 1, 1}, std::vector<int>{0, 0, 0, 1}) ==
          Approx(mi / (0.5 * (hp + ht))).epsilon(1e-12));
  }

  TEST_CASE("ari examples") {
    const std::vector<int> truth{0, 0, 1, 1, 2, 2};
    CHECK(ari(truth, truth) == Approx(1.0).epsilon(1e-12));
    CHECK(ari(std::vector<int>(6, 0), truth) == 0.0);
    const std::vector<int> p8{0, 0, 0, 1, 1, 1, 2, 2}, t8{0, 0, 1, 1, 1, 2, 2, 2};
    CHECK(ari(p8, t8) == Approx(test::pair_counting_ari(p8, t8)).epsilon(1e-12));
    CHECK_THROWS_AS(ari(std::vector<int>{0}, std::vector<int>{0}), DataError);
  }

  TEST_CASE("ari matches pair counting on random labelings") {
    std::mt19937_64 rng(3);
    for (int t = 0; t < 100; ++t) {
      const auto a = test::random_labels(15, 4, rng), b = test::random_labels(15, 3, rng);
      CHECK(ari(a, b) == Approx(test::pair_counting_ari(a, b)).epsilon(1e-10));
    }
  }

  TEST_CASE("metrics are symmetric and permutation invariant") {
    std::mt19937_64 rng(4);
    for (int t = 0; t < 100; ++t) {
      const auto p = test::random_labels(30, 5, rng), q = test::random_labels(30, 4, rng);
      const auto p2 = test::relabel(p, rng), q2 = test::relabel(q, rng);
      CHECK(clustering_accuracy(p2, q2) == clustering_accuracy(p, q));
      CHECK(nmi(p2, q2) == Approx(nmi(p, q)).epsilon(1e-12));
      CHECK(ari(p2, q2) == Approx(ari(p, q)).epsilon(1e-12));
      CHECK(nmi(q, p) == Approx(nmi(p, q)).epsilon(1e-12));
      CHECK(ari(q, p) == Approx(ari(p, q)).epsilon(1e-12));
    }
  }

  TEST_CASE("silhouette examples") {
    EmbeddingMatrix pairs(4, 1, {0.0, 0.1, 100.0, 100.1});
    CHECK(silhouette(pairs, std::vector<int>{0, 0, 1, 1}) > 0.99);

    EmbeddingMatrix line(6, 1, {0, 1, 2, 3, 4, 5});
    CHECK(silhouette(line, std::vector<int>{0, 1, 0, 1, 0, 1}) < 0.0);

    // Sample 2 is a singleton and contributes 0 to the mean.
    EmbeddingMatrix three(3, 1, {0.0, 0.1, 50.0});
    const double s = silhouette(three, std::vector<int>{0, 0, 1});
    const double a = 0.1, b0 = 50.0, b1 = 49.9;
    CHECK(s == Approx(((b0 - a) / b0 + (b1 - a) / b1) / 3.0).epsilon(1e-12));

    CHECK_THROWS_AS(silhouette(pairs, std::vector<int>{1, 1, 1, 1}), DataError);
  }

  TEST_CASE("silhouette matches a direct computation") {
    std::mt19937_64 rng(5);
    for (int t = 0; t < 30; ++t) {
      const auto z = test::random_matrix(18, 3, rng);
      auto lab = test::random_labels(18, 4, rng);
      lab[0] = 0;
      lab[1] = 1;
      CHECK(silhouette(z, lab) == Approx(naive_silhouette(z, lab)).epsilon(1e-12));
    }
  }

  TEST_CASE("subset report: perfect clustering") {
    Dataset d;
    d.features = EmbeddingMatrix(6, 2, {0, 0, 0, 1, 5, 5, 5, 6, 9, 0, 9, 1});
    for (int i = 0; i < 6; ++i) {
      SampleMeta m{"c" + std::to_string(i), "s" + std::to_string(i / 2), std::nullopt,
                   Split::Unlabelled, std::nullopt};
      if (i < 4) {
        m.split = Split::Labelled;
        m.label = i / 2;
      } else {
        m.truth = 2;
      }
      d.meta.push_back(m);
    }
    const Assignment a{{7, 7, 4, 4, 1, 1}, 3};
    const auto r = subset_report(a, d, d.features);
    CHECK(r.metrics.all.acc == 1.0);
    CHECK(r.metrics.old_classes.acc == 1.0);
    CHECK(r.metrics.new_classes.acc == 1.0);
    CHECK(r.metrics.all.n_samples == 6);
    CHECK(r.metrics.old_classes.n_samples == 4);
    CHECK(r.metrics.new_classes.n_samples == 2);
    CHECK(r.metrics.all.silhouette_defined);
    CHECK_FALSE(r.metrics.new_classes.silhouette_defined);  // one cluster in the subset

    d.meta[5].truth.reset();
    CHECK_THROWS_AS(subset_report(a, d, d.features), DataError);
  }

  TEST_CASE("subset report: perfect on Old, noisy on New, weighted exactly") {
    std::mt19937_64 rng(6);
    for (int t = 0; t < 50; ++t) {
      Dataset d;
      const std::size_t n = 40;
      d.features = test::random_matrix(n, 3, rng);
      Assignment a;
      a.cluster_of.resize(n);
      for (std::size_t i = 0; i < n; ++i) {
        const int cls = static_cast<int>(i % 5);
        SampleMeta m{"c" + std::to_string(i), "s" + std::to_string(i), std::nullopt,
                     Split::Unlabelled, std::nullopt};
        if (cls < 3) {
          m.split = Split::Labelled;
          m.label = cls;
          a.cluster_of[i] = cls;
        } else {
          m.truth = cls;
          a.cluster_of[i] = 3 + static_cast<int>(rng() % 2);
        }
        d.meta.push_back(m);
      }
      a.n_clusters = 5;
      const auto r = subset_report(a, d, d.features);
      CHECK(r.metrics.old_classes.acc == 1.0);
      CHECK(r.metrics.new_classes.acc <= 1.0);
      CHECK(r.old_classes.correct + r.new_classes.correct == r.all.correct);
      CHECK(r.old_classes.total + r.new_classes.total == r.all.total);
      const double lhs = 24.0 * r.metrics.old_classes.acc + 16.0 * r.metrics.new_classes.acc;
      CHECK(lhs == Approx(40.0 * r.metrics.all.acc).epsilon(1e-12));
    }
  }
}
