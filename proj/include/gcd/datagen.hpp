#pragma once

#include <cstddef>
#include <cstdint>

#include "gcd/core.hpp"

namespace gcd {

/// Class -> source recording -> clip hierarchy of isotropic Gaussians.
/// Class centroids are N(0, (class_spread^2 / dim) I), so a centroid has norm
/// about class_spread. Source offsets and clip noise use the per-coordinate
/// standard deviations source_sigma and clip_sigma.
struct SynthConfig {
  std::size_t n_old_classes = 8;
  std::size_t n_new_classes = 4;
  std::size_t sources_per_class = 6;
  std::size_t clips_per_source = 10;
  std::size_t dim = 64;
  double class_spread = 10.0;
  double source_sigma = 0.5;
  double clip_sigma = 0.5;
  std::uint64_t seed = 0;
  /// Overlap mode: old classes 0 and 1 get centroids only
  /// overlap_fraction * class_spread apart (needs >= 2 old classes).
  bool overlap = false;
  double overlap_fraction = 0.3;

  void validate() const;
};

/// Old classes are 0..n_old-1 and labelled; new classes follow and are
/// unlabelled, with their truth kept in SampleMeta::truth.
Dataset generate(const SynthConfig& cfg);

}  // namespace gcd
