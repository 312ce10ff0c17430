#include "gcd/encoder.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <string>

namespace gcd {

EncoderLayout::EncoderLayout(std::size_t input_dim, std::size_t hidden_dim,
                             std::size_t n_blocks)
    : input_dim_(input_dim), hidden_dim_(hidden_dim), n_blocks_(n_blocks) {
  values_.assign(n_blocks_ * block_size(), 0.0);
}

EncoderLayout::Block<double> EncoderLayout::block(std::size_t b) {
  double* base = values_.data() + b * block_size();
  const std::size_t d = input_dim_, h = hidden_dim_;
  return {{base, h * d}, {base + h * d, h}, {base + h * d + h, d * h}, {base + 2 * h * d + h, d}};
}

EncoderLayout::Block<const double> EncoderLayout::block(std::size_t b) const {
  const double* base = values_.data() + b * block_size();
  const std::size_t d = input_dim_, h = hidden_dim_;
  return {{base, h * d}, {base + h * d, h}, {base + h * d + h, d * h}, {base + 2 * h * d + h, d}};
}

bool EncoderLayout::all_finite() const {
  return std::all_of(values_.begin(), values_.end(), [](double v) { return std::isfinite(v); });
}

EncoderParams encoder_init(std::size_t input_dim, std::size_t hidden_dim, std::size_t n_blocks,
                           std::uint64_t seed) {
  if (input_dim == 0 || hidden_dim == 0 || n_blocks == 0) {
    throw UsageError("encoder_init: dimensions and block count must be >= 1");
  }
  EncoderParams p(input_dim, hidden_dim, n_blocks);
  std::mt19937_64 rng(seed);
  const double bound1 = 1.0 / std::sqrt(static_cast<double>(input_dim));
  const double bound2 = 1.0 / std::sqrt(static_cast<double>(hidden_dim));
  std::uniform_real_distribution<double> u1(-bound1, bound1);
  std::uniform_real_distribution<double> u2(-bound2, bound2);
  for (std::size_t b = 0; b < n_blocks; ++b) {
    auto blk = p.block(b);
    for (double& w : blk.w1) w = u1(rng);
    for (double& w : blk.w2) w = u2(rng);
  }
  return p;
}

namespace {

// Per-block activations kept for the backward pass.
struct Trace {
  std::vector<EmbeddingMatrix> inputs;  // block inputs x_b
  std::vector<EmbeddingMatrix> hidden;  // tanh(W1 x_b + b1)
  EmbeddingMatrix output;
};

void check_input(const EncoderParams& p, const EmbeddingMatrix& h) {
  if (h.dim() != p.input_dim()) {
    throw DataError("encoder: input dim " + std::to_string(h.dim()) +
                    " does not match encoder input_dim " + std::to_string(p.input_dim()));
  }
}

// One residual block over every row; `hidden` receives the tanh activations.
void block_forward(EncoderLayout::Block<const double> blk, std::size_t d, std::size_t hd,
                   const EmbeddingMatrix& x, EmbeddingMatrix& hidden, EmbeddingMatrix& y,
                   Exec exec) {
  for_each_index(x.rows(), exec, [&](std::size_t r) {
    const auto xr = x.row(r);
    auto tr = hidden.row(r);
    for (std::size_t k = 0; k < hd; ++k) {
      double a = blk.b1[k];
      const double* w = blk.w1.data() + k * d;
      for (std::size_t j = 0; j < d; ++j) a += w[j] * xr[j];
      tr[k] = std::tanh(a);
    }
    auto yr = y.row(r);
    for (std::size_t i = 0; i < d; ++i) {
      double v = blk.b2[i];
      const double* w = blk.w2.data() + i * hd;
      for (std::size_t k = 0; k < hd; ++k) v += w[k] * tr[k];
      yr[i] = xr[i] + v;
    }
  });
}

Trace forward_trace(const EncoderParams& p, const EmbeddingMatrix& h, Exec exec) {
  const std::size_t d = p.input_dim(), hd = p.hidden_dim(), n = h.rows();
  Trace t;
  t.inputs.reserve(p.n_blocks());
  t.hidden.reserve(p.n_blocks());
  EmbeddingMatrix x = h;
  for (std::size_t b = 0; b < p.n_blocks(); ++b) {
    EmbeddingMatrix hidden(n, hd);
    EmbeddingMatrix y(n, d);
    block_forward(p.block(b), d, hd, x, hidden, y, exec);
    t.inputs.push_back(std::move(x));
    t.hidden.push_back(std::move(hidden));
    x = std::move(y);
  }
  t.output = std::move(x);
  return t;
}

}  // namespace

EmbeddingMatrix encoder_forward(const EncoderParams& p, const EmbeddingMatrix& h, Exec exec) {
  check_input(p, h);
  const std::size_t d = p.input_dim(), hd = p.hidden_dim(), n = h.rows();
  EmbeddingMatrix x = h;
  EmbeddingMatrix hidden(n, hd);
  EmbeddingMatrix y(n, d);
  for (std::size_t b = 0; b < p.n_blocks(); ++b) {
    block_forward(p.block(b), d, hd, x, hidden, y, exec);
    std::swap(x, y);
  }
  return x;
}

EncoderGradients encoder_backward(const EncoderParams& p, const EmbeddingMatrix& h,
                                  const EmbeddingMatrix& grad_z, Exec exec) {
  check_input(p, h);
  if (grad_z.rows() != h.rows() || grad_z.dim() != h.dim()) {
    throw DataError("encoder_backward: grad_z shape does not match encoder output");
  }
  const std::size_t d = p.input_dim(), hd = p.hidden_dim(), n = h.rows();
  const Trace t = forward_trace(p, h, exec);
  EncoderGradients g(d, hd, p.n_blocks());

  EmbeddingMatrix gy = grad_z;
  EmbeddingMatrix ga(n, hd);
  for (std::size_t bi = p.n_blocks(); bi-- > 0;) {
    const auto blk = p.block(bi);
    auto gblk = g.block(bi);
    const auto& x = t.inputs[bi];
    const auto& th = t.hidden[bi];

    // dL/da = (W2^T gy) * (1 - tanh^2), row-local.
    for_each_index(n, exec, [&](std::size_t r) {
      const auto gr = gy.row(r);
      const auto tr = th.row(r);
      auto out = ga.row(r);
      for (std::size_t k = 0; k < hd; ++k) {
        double s = 0.0;
        for (std::size_t i = 0; i < d; ++i) s += blk.w2[i * hd + k] * gr[i];
        out[k] = s * (1.0 - tr[k] * tr[k]);
      }
    });

    // Parameter gradients: each output row owns its entries and sums samples
    // in index order, so the result does not depend on the thread count.
    for_each_index(d, exec, [&](std::size_t i) {
      double* w = gblk.w2.data() + i * hd;
      double bsum = 0.0;
      for (std::size_t r = 0; r < n; ++r) {
        const double gi = gy(r, i);
        const auto tr = th.row(r);
        for (std::size_t k = 0; k < hd; ++k) w[k] += gi * tr[k];
        bsum += gi;
      }
      gblk.b2[i] = bsum;
    });
    for_each_index(hd, exec, [&](std::size_t k) {
      double* w = gblk.w1.data() + k * d;
      double bsum = 0.0;
      for (std::size_t r = 0; r < n; ++r) {
        const double gk = ga(r, k);
        const auto xr = x.row(r);
        for (std::size_t j = 0; j < d; ++j) w[j] += gk * xr[j];
        bsum += gk;
      }
      gblk.b1[k] = bsum;
    });

    if (bi == 0) break;
    // dL/dx = gy + W1^T ga (residual path plus block path).
    for_each_index(n, exec, [&](std::size_t r) {
      auto gr = gy.row(r);
      const auto gar = ga.row(r);
      for (std::size_t j = 0; j < d; ++j) {
        double s = 0.0;
        for (std::size_t k = 0; k < hd; ++k) s += blk.w1[k * d + j] * gar[k];
        gr[j] += s;
      }
    });
  }
  return g;
}

GradientCheck gradient_check(const EncoderParams& p, const EmbeddingMatrix& h,
                             const OutputLoss& loss_fn, double step, double floor) {
  const auto z = encoder_forward(p, h);
  const auto [loss, grad_z] = loss_fn(z);
  (void)loss;
  const auto analytic = encoder_backward(p, h, grad_z);

  GradientCheck out;
  EncoderParams probe = p;
  for (std::size_t i = 0; i < p.size(); ++i) {
    const double orig = probe.values()[i];
    probe.values()[i] = orig + step;
    const double up = loss_fn(encoder_forward(probe, h)).first;
    probe.values()[i] = orig - step;
    const double down = loss_fn(encoder_forward(probe, h)).first;
    probe.values()[i] = orig;

    const double num = (up - down) / (2.0 * step);
    const double a = analytic.values()[i];
    const double denom = std::max({std::abs(a), std::abs(num), floor});
    const double rel = std::abs(a - num) / denom;
    if (rel > out.max_rel_error) out = {rel, i, a, num};
  }
  return out;
}

}  // namespace gcd
