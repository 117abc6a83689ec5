#pragma once

#include <span>
#include <vector>

namespace fedrec::internal {

// Parameters of an additive-attention pooling layer:
//   score_t = q . tanh(W x_t + b),  alpha = softmax(score),  out = sum alpha_t x_t
// W is hidden x dim, row-major.
struct AttentionParams {
  std::span<const double> w;
  std::span<const double> b;
  std::span<const double> q;
  std::size_t hidden = 0;
  std::size_t dim = 0;
};

struct AttentionGrads {
  std::span<double> w;
  std::span<double> b;
  std::span<double> q;
};

struct AttentionCache {
  std::vector<double> act;    // count x hidden, tanh activations
  std::vector<double> alpha;  // count
};

// `inputs` holds `count` rows of length dim.
void attention_forward(const AttentionParams& p, std::span<const double> inputs,
                       std::size_t count, AttentionCache& cache,
                       std::span<double> out);

// Accumulates parameter gradients into `grads` and input gradients into
// `d_inputs` (count x dim).
void attention_backward(const AttentionParams& p,
                        std::span<const double> inputs, std::size_t count,
                        const AttentionCache& cache,
                        std::span<const double> d_out, AttentionGrads grads,
                        std::span<double> d_inputs);

}  // namespace fedrec::internal
