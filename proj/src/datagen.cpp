#include "gcd/datagen.hpp"

#include <cmath>
#include <cstdio>
#include <random>
#include <string>

namespace gcd {

void SynthConfig::validate() const {
  if (n_old_classes < 1 || n_new_classes < 1 || sources_per_class < 1 || clips_per_source < 1 ||
      dim < 1) {
    throw UsageError("synthetic config: all counts must be >= 1");
  }
  if (!(source_sigma >= 0.0) || !(clip_sigma >= 0.0)) {
    throw UsageError("synthetic config: sigmas must be >= 0");
  }
  if (!(class_spread > 0.0)) throw UsageError("synthetic config: class_spread must be > 0");
  if (overlap && n_old_classes < 2) {
    throw UsageError("synthetic config: overlap mode needs at least two old classes");
  }
  if (overlap && !(overlap_fraction >= 0.0)) {
    throw UsageError("synthetic config: overlap_fraction must be >= 0");
  }
}

namespace {

std::string padded(const char* prefix, std::size_t v, int width) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%s%0*zu", prefix, width, v);
  return buf;
}

}  // namespace

Dataset generate(const SynthConfig& cfg) {
  cfg.validate();
  const std::size_t n_classes = cfg.n_old_classes + cfg.n_new_classes;
  const std::size_t n = n_classes * cfg.sources_per_class * cfg.clips_per_source;
  const std::size_t dim = cfg.dim;

  std::mt19937_64 rng(cfg.seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  const double centroid_sigma = cfg.class_spread / std::sqrt(static_cast<double>(dim));

  EmbeddingMatrix centroids(n_classes, dim);
  for (double& v : centroids.values()) v = centroid_sigma * gauss(rng);
  if (cfg.overlap) {
    std::vector<double> dir(dim);
    double norm = 0.0;
    for (double& v : dir) {
      v = gauss(rng);
      norm += v * v;
    }
    norm = std::sqrt(norm);
    const double gap = cfg.overlap_fraction * cfg.class_spread;
    for (std::size_t j = 0; j < dim; ++j) centroids(1, j) = centroids(0, j) + gap * dir[j] / norm;
  }

  Dataset d;
  d.meta.reserve(n);
  d.features = EmbeddingMatrix(n, dim);
  std::vector<double> source_mean(dim);
  std::size_t row = 0, source_index = 0;
  for (std::size_t c = 0; c < n_classes; ++c) {
    const bool old = c < cfg.n_old_classes;
    for (std::size_t s = 0; s < cfg.sources_per_class; ++s, ++source_index) {
      for (std::size_t j = 0; j < dim; ++j) {
        source_mean[j] = centroids(c, j) + cfg.source_sigma * gauss(rng);
      }
      const std::string source_id = padded("src", source_index, 4);
      for (std::size_t k = 0; k < cfg.clips_per_source; ++k, ++row) {
        auto out = d.features.row(row);
        for (std::size_t j = 0; j < dim; ++j) out[j] = source_mean[j] + cfg.clip_sigma * gauss(rng);
        SampleMeta m;
        m.sample_id = source_id + padded("_clip", k, 3);
        m.source_id = source_id;
        m.split = old ? Split::Labelled : Split::Unlabelled;
        if (old) m.label = static_cast<int>(c);
        m.truth = static_cast<int>(c);
        d.meta.push_back(std::move(m));
      }
    }
  }
  return d;
}

}  // namespace gcd
