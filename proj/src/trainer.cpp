#include "gcd/trainer.hpp"

#include <cmath>
#include <string>

#include "gcd/objective.hpp"
#include "gcd/simgeom.hpp"

namespace gcd {

namespace {

constexpr double kBeta1 = 0.9;
constexpr double kBeta2 = 0.999;
constexpr double kEpsilon = 1e-8;

bool all_finite(std::span<const double> v) {
  for (double x : v) {
    if (!std::isfinite(x)) return false;
  }
  return true;
}

void adam_step(TrainState& st, const EncoderGradients& g, double lr) {
  const double t = static_cast<double>(st.epoch + 1);
  const double c1 = 1.0 - std::pow(kBeta1, t);
  const double c2 = 1.0 - std::pow(kBeta2, t);
  auto p = st.params.values();
  const auto gv = g.values();
  for (std::size_t i = 0; i < p.size(); ++i) {
    st.first_moment[i] = kBeta1 * st.first_moment[i] + (1.0 - kBeta1) * gv[i];
    st.second_moment[i] = kBeta2 * st.second_moment[i] + (1.0 - kBeta2) * gv[i] * gv[i];
    const double mhat = st.first_moment[i] / c1;
    const double vhat = st.second_moment[i] / c2;
    p[i] -= lr * mhat / (std::sqrt(vhat) + kEpsilon);
  }
}

}  // namespace

std::mt19937_64 epoch_rng(std::uint64_t seed, std::size_t epoch) {
  const auto e = static_cast<std::uint64_t>(epoch);
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(e), static_cast<std::uint32_t>(e >> 32),
                    0x67636470u};
  return std::mt19937_64(seq);
}

TrainResult train(const TrainingSet& d, const TrainConfig& cfg, const EncoderParams& init,
                  const EpochCallback& on_epoch, Exec exec) {
  cfg.validate();
  if (d.features.dim() != init.input_dim()) {
    throw DataError("train: feature dim " + std::to_string(d.features.dim()) +
                    " does not match encoder input_dim " + std::to_string(init.input_dim()));
  }
  if (d.features.rows() != d.size()) throw DataError("train: features/metadata row mismatch");

  TrainState st;
  st.params = init;
  st.first_moment.assign(init.size(), 0.0);
  st.second_moment.assign(init.size(), 0.0);
  st.seed = cfg.seed;

  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    EpochLoss rec;
    rec.epoch = epoch;
    EncoderGradients grads;
    try {
      const auto z = encoder_forward(st.params, d.features, exec);
      const auto sims = similarity_matrix(z, exec);
      PairSets sup, uns;
      if (cfg.lambda < 1.0) sup = build_supervised_pairs(d, sims, cfg.n_neg, exec);
      if (cfg.lambda > 0.0) {
        auto rng = epoch_rng(cfg.seed, epoch);
        uns = build_unsupervised_pairs(d, sims, cfg.n_pos_unsup, cfg.n_neg, rng, exec);
      }
      const auto loss = combined_loss(z, sup, uns, cfg.tau, cfg.lambda, cfg.loss_reduction, exec);
      rec.supervised = loss.supervised;
      rec.unsupervised = loss.unsupervised;
      rec.combined = loss.value;
      rec.sup_anchors = sup.anchors.size();
      rec.unsup_anchors = uns.anchors.size();
      if (!std::isfinite(loss.value) || !all_finite(loss.grad.values())) {
        throw NumericError("non-finite loss or embedding gradient");
      }
      grads = encoder_backward(st.params, d.features, loss.grad, exec);
      if (!grads.all_finite()) throw NumericError("non-finite parameter gradient");
    } catch (const NumericError& e) {
      throw NumericError("epoch " + std::to_string(epoch) + ": " + e.what());
    }

    adam_step(st, grads, cfg.learning_rate);
    if (!st.params.all_finite()) {
      throw NumericError("epoch " + std::to_string(epoch) + ": parameters became non-finite");
    }
    st.history.push_back(rec);
    st.epoch = epoch + 1;
    if (on_epoch) on_epoch(rec);
  }

  TrainResult out;
  out.embeddings = encoder_forward(st.params, d.features, exec);
  out.state = std::move(st);
  return out;
}

EmbeddingMatrix embed_all(const TrainState& state, const EmbeddingMatrix& features, Exec exec) {
  return encoder_forward(state.params, features, exec);
}

}  // namespace gcd
