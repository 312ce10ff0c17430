#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <random>
#include <vector>

#include "gcd/core.hpp"
#include "gcd/encoder.hpp"
#include "gcd/parallel.hpp"

namespace gcd {

struct EpochLoss {
  std::size_t epoch = 0;
  double supervised = 0.0;
  double unsupervised = 0.0;
  double combined = 0.0;
  std::size_t sup_anchors = 0;
  std::size_t unsup_anchors = 0;
};

struct TrainState {
  EncoderParams params;
  std::vector<double> first_moment;
  std::vector<double> second_moment;
  std::size_t epoch = 0;            // completed epochs
  std::vector<EpochLoss> history;   // losses at the start of each completed epoch
  std::uint64_t seed = 0;           // with `epoch`, fixes the next positive draw
};

struct TrainResult {
  TrainState state;
  EmbeddingMatrix embeddings;  // encoder output under the final parameters
};

/// RNG for the unsupervised positive draw of one epoch.
std::mt19937_64 epoch_rng(std::uint64_t seed, std::size_t epoch);

using EpochCallback = std::function<void(const EpochLoss&)>;

/// Full-batch training. Each epoch embeds every sample, rebuilds both pair
/// sets from that epoch's similarities, evaluates the combined loss, backs it
/// through the encoder and takes one Adam step (0.9, 0.999, 1e-8).
/// Throws NumericError naming the epoch on a non-finite loss or gradient.
TrainResult train(const TrainingSet& d, const TrainConfig& cfg, const EncoderParams& init,
                  const EpochCallback& on_epoch = {}, Exec exec = Exec::Parallel);

EmbeddingMatrix embed_all(const TrainState& state, const EmbeddingMatrix& features,
                          Exec exec = Exec::Parallel);

}  // namespace gcd
