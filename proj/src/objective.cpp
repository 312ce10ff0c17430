#include "gcd/objective.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <optional>
#include <unordered_map>
#include <utility>

namespace gcd {

namespace {

// Lowest-similarity prefix of `candidates` (modified in place). The
// comparator is a strict total order, so the prefix equals that of a full
// rank_ascending sort.
std::vector<std::size_t> hardest(std::size_t anchor, std::vector<std::size_t> candidates,
                                 const SimilarityMatrix& s, std::size_t count) {
  const auto row = s.row(anchor);
  auto less = [&](std::size_t a, std::size_t b) {
    if (row[a] != row[b]) return row[a] < row[b];
    return a < b;
  };
  const std::size_t take = std::min(count, candidates.size());
  std::partial_sort(candidates.begin(), candidates.begin() + static_cast<std::ptrdiff_t>(take),
                    candidates.end(), less);
  candidates.resize(take);
  return candidates;
}

void check_similarity(const TrainingSet& d, const SimilarityMatrix& s) {
  if (s.size() != d.size()) {
    throw DataError("similarity matrix has " + std::to_string(s.size()) +
                    " rows but dataset has " + std::to_string(d.size()) + " samples");
  }
}

}  // namespace

std::vector<std::size_t> mine_hard_negatives(std::size_t anchor,
                                             std::span<const std::size_t> candidates,
                                             const SimilarityMatrix& s, std::size_t count) {
  if (candidates.empty()) {
    throw DataError("anchor " + std::to_string(anchor) + " has no negative candidates");
  }
  if (count == 0) throw UsageError("negative count must be >= 1");
  for (std::size_t c : candidates) {
    if (c == anchor) throw DataError("anchor listed among its own negative candidates");
    if (c >= s.size()) throw DataError("negative candidate index out of range");
  }
  return hardest(anchor, {candidates.begin(), candidates.end()}, s, count);
}

PairSets build_supervised_pairs(const TrainingSet& d, const SimilarityMatrix& s,
                                std::size_t count_neg, Exec exec) {
  check_similarity(d, s);
  if (count_neg == 0) throw UsageError("negative count must be >= 1");
  std::vector<std::size_t> labelled;
  std::map<int, std::vector<std::size_t>> by_class;
  for (std::size_t i = 0; i < d.size(); ++i) {
    const auto& smp = d.samples[i];
    if (smp.split == Split::Labelled && smp.label) {
      labelled.push_back(i);
      by_class[*smp.label].push_back(i);
    }
  }
  if (labelled.empty()) throw DataError("supervised pairs: dataset has no labelled samples");

  std::vector<std::optional<AnchorPairs>> slots(labelled.size());
  for_each_index_dynamic(labelled.size(), exec, [&](std::size_t a) {
    const std::size_t i = labelled[a];
    const int y = *d.samples[i].label;
    AnchorPairs ap;
    ap.anchor = i;
    for (std::size_t p : by_class.at(y)) {
      if (p != i) ap.positives.push_back(p);
    }
    if (ap.positives.empty()) return;
    std::vector<std::size_t> candidates;
    candidates.reserve(labelled.size());
    for (std::size_t k : labelled) {
      if (*d.samples[k].label != y) candidates.push_back(k);
    }
    if (candidates.empty()) return;
    ap.negatives = hardest(i, std::move(candidates), s, count_neg);
    slots[a] = std::move(ap);
  });

  PairSets out;
  for (std::size_t a = 0; a < labelled.size(); ++a) {
    const std::size_t i = labelled[a];
    if (slots[a]) {
      out.anchors.push_back(std::move(*slots[a]));
    } else if (by_class.at(*d.samples[i].label).size() < 2) {
      out.skipped.push_back({i, "singleton class: no positives"});
    } else {
      out.skipped.push_back({i, "single labelled class: no negatives"});
    }
  }
  return out;
}

PairSets build_unsupervised_pairs(const TrainingSet& d, const SimilarityMatrix& s,
                                  std::size_t count_pos, std::size_t count_neg,
                                  std::mt19937_64& rng, Exec exec) {
  check_similarity(d, s);
  if (count_pos == 0 || count_neg == 0) throw UsageError("pair counts must be >= 1");
  const std::size_t n = d.size();

  std::unordered_map<std::string, std::size_t> code_of;
  std::vector<std::size_t> source(n);
  std::vector<std::vector<std::size_t>> members;
  for (std::size_t i = 0; i < n; ++i) {
    auto [it, fresh] = code_of.emplace(d.samples[i].source_id, members.size());
    if (fresh) members.emplace_back();
    source[i] = it->second;
    members[it->second].push_back(i);
  }

  // Positive draws run serially in anchor order so the RNG stream is fixed.
  PairSets out;
  for (std::size_t j = 0; j < n; ++j) {
    const auto& group = members[source[j]];
    if (group.size() < 2) {
      out.skipped.push_back({j, "single-clip source: no positives"});
      continue;
    }
    if (group.size() == n) {
      out.skipped.push_back({j, "single source: no negatives"});
      continue;
    }
    std::vector<std::size_t> others;
    others.reserve(group.size() - 1);
    for (std::size_t p : group) {
      if (p != j) others.push_back(p);
    }
    if (others.size() > count_pos) {
      for (std::size_t t = 0; t < count_pos; ++t) {
        std::uniform_int_distribution<std::size_t> pick(t, others.size() - 1);
        std::swap(others[t], others[pick(rng)]);
      }
      others.resize(count_pos);
    }
    out.anchors.push_back({j, std::move(others), {}});
  }

  for_each_index_dynamic(out.anchors.size(), exec, [&](std::size_t a) {
    auto& ap = out.anchors[a];
    const std::size_t src = source[ap.anchor];
    std::vector<std::size_t> candidates;
    candidates.reserve(n);
    for (std::size_t k = 0; k < n; ++k) {
      if (source[k] != src) candidates.push_back(k);
    }
    ap.negatives = hardest(ap.anchor, std::move(candidates), s, count_neg);
  });
  return out;
}

LossResult contrastive_loss(const EmbeddingMatrix& z, const PairSets& pairs, double tau,
                            LossReduction reduction, Exec exec) {
  if (!(tau > 0.0)) throw UsageError("tau must be > 0");
  const std::size_t n = z.rows();
  for (const auto& ap : pairs.anchors) {
    if (ap.positives.empty()) {
      throw DataError("anchor " + std::to_string(ap.anchor) +
                      " has no positives; skip it when building pairs");
    }
    auto in_range = [n](std::size_t i) { return i < n; };
    if (!in_range(ap.anchor) || !std::all_of(ap.positives.begin(), ap.positives.end(), in_range) ||
        !std::all_of(ap.negatives.begin(), ap.negatives.end(), in_range)) {
      throw DataError("pair index out of range for embedding matrix");
    }
  }
  const auto norms = row_norms(z);
  const double inv_tau = 1.0 / tau;
  auto sim = [&](std::size_t a, std::size_t b) {
    return std::clamp(dot(z.row(a), z.row(b)) / (norms[a] * norms[b]), -1.0, 1.0);
  };

  const std::size_t m = pairs.anchors.size();
  LossResult out;
  out.n_anchors = m;
  out.grad = EmbeddingMatrix(n, z.dim());
  if (m == 0) return out;
  const double scale = reduction == LossReduction::Mean ? 1.0 / static_cast<double>(m) : 1.0;

  // Phase 1: per-anchor loss and d(loss)/d(sim) for every (anchor, partner).
  std::vector<double> anchor_loss(m);
  std::vector<std::vector<double>> coeff(m);
  for_each_index_dynamic(m, exec, [&](std::size_t a) {
    const auto& ap = pairs.anchors[a];
    const std::size_t np = ap.positives.size();
    const std::size_t nn = ap.negatives.size();
    std::vector<double> neg_logit(nn);
    double neg_max = -std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < nn; ++k) {
      neg_logit[k] = sim(ap.anchor, ap.negatives[k]) * inv_tau;
      neg_max = std::max(neg_max, neg_logit[k]);
    }
    auto& c = coeff[a];
    c.assign(np + nn, 0.0);
    const double w = scale / static_cast<double>(np);
    double total = 0.0;
    std::vector<double> neg_exp(nn);
    for (std::size_t p = 0; p < np; ++p) {
      const double pos_logit = sim(ap.anchor, ap.positives[p]) * inv_tau;
      const double mx = std::max(pos_logit, neg_max);
      double denom = std::exp(pos_logit - mx);
      for (std::size_t k = 0; k < nn; ++k) {
        neg_exp[k] = std::exp(neg_logit[k] - mx);
        denom += neg_exp[k];
      }
      // term = log(denom) - (pos_logit - mx) = -log softmax of the positive
      total += std::log(denom) - (pos_logit - mx);
      const double pos_prob = std::exp(pos_logit - mx) / denom;
      c[p] = -w * (1.0 - pos_prob) * inv_tau;
      for (std::size_t k = 0; k < nn; ++k) c[np + k] += w * (neg_exp[k] / denom) * inv_tau;
    }
    anchor_loss[a] = total / static_cast<double>(np);
  });

  double sum = 0.0;
  for (double v : anchor_loss) sum += v;
  out.value = sum * scale;

  // Phase 2: every (anchor, partner, c) contributes c * d sim / d z to both
  // rows. Contributions are gathered per row in anchor order.
  std::vector<std::vector<std::pair<std::size_t, double>>> incoming(n);
  for (std::size_t a = 0; a < m; ++a) {
    const auto& ap = pairs.anchors[a];
    const std::size_t np = ap.positives.size();
    for (std::size_t t = 0; t < coeff[a].size(); ++t) {
      const std::size_t q = t < np ? ap.positives[t] : ap.negatives[t - np];
      incoming[ap.anchor].emplace_back(q, coeff[a][t]);
      incoming[q].emplace_back(ap.anchor, coeff[a][t]);
    }
  }
  for_each_index(n, exec, [&](std::size_t r) {
    auto g = out.grad.row(r);
    const auto zr = z.row(r);
    const double nr = norms[r];
    for (const auto& [q, c] : incoming[r]) {
      const auto zq = z.row(q);
      const double nq = norms[q];
      const double s = dot(zr, zq) / (nr * nq);
      // d sim(r, q) / d z_r = z_q / (|z_r||z_q|) - s * z_r / |z_r|^2
      const double a1 = c / (nr * nq);
      const double a2 = c * s / (nr * nr);
      for (std::size_t j = 0; j < g.size(); ++j) g[j] += a1 * zq[j] - a2 * zr[j];
    }
  });
  return out;
}

CombinedLoss combined_loss(const EmbeddingMatrix& z, const PairSets& sup_pairs,
                           const PairSets& unsup_pairs, double tau, double lambda,
                           LossReduction reduction, Exec exec) {
  if (!(lambda >= 0.0 && lambda <= 1.0)) throw UsageError("lambda must be in [0, 1]");
  const auto sup = supervised_loss(z, sup_pairs, tau, reduction, exec);
  const auto uns = unsupervised_loss(z, unsup_pairs, tau, reduction, exec);
  CombinedLoss out;
  out.supervised = sup.value;
  out.unsupervised = uns.value;
  out.value = (1.0 - lambda) * sup.value + lambda * uns.value;
  out.grad = EmbeddingMatrix(z.rows(), z.dim());
  auto g = out.grad.values();
  const auto gs = sup.grad.values();
  const auto gu = uns.grad.values();
  for (std::size_t i = 0; i < g.size(); ++i) g[i] = (1.0 - lambda) * gs[i] + lambda * gu[i];
  return out;
}

}  // namespace gcd
