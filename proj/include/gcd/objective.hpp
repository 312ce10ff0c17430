#pragma once

#include <cstddef>
#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "gcd/core.hpp"
#include "gcd/parallel.hpp"
#include "gcd/simgeom.hpp"

namespace gcd {

struct AnchorPairs {
  std::size_t anchor = 0;
  std::vector<std::size_t> positives;
  std::vector<std::size_t> negatives;
};

struct SkippedAnchor {
  std::size_t anchor = 0;
  std::string reason;
};

/// Contrastive pair sets for every participating anchor, in ascending anchor
/// order. Anchors that cannot form a term are listed in `skipped`.
struct PairSets {
  std::vector<AnchorPairs> anchors;
  std::vector<SkippedAnchor> skipped;
};

/// The `count` least similar candidates (rank_ascending prefix). Throws
/// DataError on an empty candidate set.
std::vector<std::size_t> mine_hard_negatives(std::size_t anchor,
                                             std::span<const std::size_t> candidates,
                                             const SimilarityMatrix& s, std::size_t count);

/// Labelled anchors only: positives are all other samples of the anchor's
/// class, negatives the hardest `count_neg` labelled samples of other classes.
PairSets build_supervised_pairs(const TrainingSet& d, const SimilarityMatrix& s,
                                std::size_t count_neg, Exec exec = Exec::Parallel);

/// Every sample is an anchor; labels are ignored. Positives are up to
/// `count_pos` same-source samples drawn without replacement, negatives the
/// hardest `count_neg` samples from other sources.
PairSets build_unsupervised_pairs(const TrainingSet& d, const SimilarityMatrix& s,
                                  std::size_t count_pos, std::size_t count_neg,
                                  std::mt19937_64& rng, Exec exec = Exec::Parallel);

struct LossResult {
  double value = 0.0;
  EmbeddingMatrix grad;  // d value / d z
  std::size_t n_anchors = 0;
};

/// Per-positive InfoNCE term with only the current positive plus the
/// negatives in the denominator, averaged over positives, then reduced over
/// anchors. Shared by the supervised and unsupervised losses.
LossResult contrastive_loss(const EmbeddingMatrix& z, const PairSets& pairs, double tau,
                            LossReduction reduction, Exec exec = Exec::Parallel);

inline LossResult supervised_loss(const EmbeddingMatrix& z, const PairSets& pairs, double tau,
                                  LossReduction reduction = LossReduction::Mean,
                                  Exec exec = Exec::Parallel) {
  return contrastive_loss(z, pairs, tau, reduction, exec);
}

inline LossResult unsupervised_loss(const EmbeddingMatrix& z, const PairSets& pairs, double tau,
                                    LossReduction reduction = LossReduction::Mean,
                                    Exec exec = Exec::Parallel) {
  return contrastive_loss(z, pairs, tau, reduction, exec);
}

struct CombinedLoss {
  double value = 0.0;
  double supervised = 0.0;
  double unsupervised = 0.0;
  EmbeddingMatrix grad;
};

/// (1 - lambda) * L_sup + lambda * L_unsup, each reduced per `reduction`.
CombinedLoss combined_loss(const EmbeddingMatrix& z, const PairSets& sup_pairs,
                           const PairSets& unsup_pairs, double tau, double lambda,
                           LossReduction reduction, Exec exec = Exec::Parallel);

}  // namespace gcd
