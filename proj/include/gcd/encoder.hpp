#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <utility>
#include <vector>

#include "gcd/core.hpp"
#include "gcd/parallel.hpp"

namespace gcd {

/// Residual feed-forward encoder: each block maps
///   x <- x + W2 tanh(W1 x + b1) + b2
/// with W1: hidden x input, W2: input x hidden. Parameters are stored flat,
/// block by block, in the order W1, b1, W2, b2 (row-major matrices). That
/// order is also the checkpoint payload order.
class EncoderLayout {
 public:
  template <class T>
  struct Block {
    std::span<T> w1, b1, w2, b2;
  };

  EncoderLayout() = default;
  EncoderLayout(std::size_t input_dim, std::size_t hidden_dim, std::size_t n_blocks);

  std::size_t input_dim() const { return input_dim_; }
  std::size_t hidden_dim() const { return hidden_dim_; }
  std::size_t n_blocks() const { return n_blocks_; }
  std::size_t size() const { return values_.size(); }
  std::size_t block_size() const { return 2 * hidden_dim_ * input_dim_ + hidden_dim_ + input_dim_; }

  Block<double> block(std::size_t b);
  Block<const double> block(std::size_t b) const;

  std::span<double> values() { return values_; }
  std::span<const double> values() const { return values_; }

  bool same_shape(const EncoderLayout& o) const {
    return input_dim_ == o.input_dim_ && hidden_dim_ == o.hidden_dim_ && n_blocks_ == o.n_blocks_;
  }
  bool all_finite() const;

  bool operator==(const EncoderLayout&) const = default;

 private:
  std::size_t input_dim_ = 0;
  std::size_t hidden_dim_ = 0;
  std::size_t n_blocks_ = 0;
  std::vector<double> values_;
};

class EncoderParams : public EncoderLayout {
 public:
  using EncoderLayout::EncoderLayout;
};

class EncoderGradients : public EncoderLayout {
 public:
  using EncoderLayout::EncoderLayout;
};

/// Uniform(-1/sqrt(fan_in), 1/sqrt(fan_in)) weights, zero biases.
EncoderParams encoder_init(std::size_t input_dim, std::size_t hidden_dim, std::size_t n_blocks,
                           std::uint64_t seed);

EmbeddingMatrix encoder_forward(const EncoderParams& p, const EmbeddingMatrix& h,
                                Exec exec = Exec::Parallel);

/// Gradient of <grad_z, encoder_forward(p, h)> with respect to every parameter.
EncoderGradients encoder_backward(const EncoderParams& p, const EmbeddingMatrix& h,
                                  const EmbeddingMatrix& grad_z, Exec exec = Exec::Parallel);

/// Scalar loss of the encoder output together with its gradient w.r.t. that output.
using OutputLoss = std::function<std::pair<double, EmbeddingMatrix>(const EmbeddingMatrix&)>;

struct GradientCheck {
  double max_rel_error = 0.0;
  std::size_t worst_param = 0;
  double analytic = 0.0;
  double numeric = 0.0;
};

/// Central differences over every parameter. The relative error of one entry
/// is |a - f| / max(|a|, |f|, floor); `floor` keeps entries whose true
/// gradient is ~0 from dividing roundoff by zero.
GradientCheck gradient_check(const EncoderParams& p, const EmbeddingMatrix& h,
                             const OutputLoss& loss_fn, double step = 1e-5, double floor = 1e-6);

}  // namespace gcd
