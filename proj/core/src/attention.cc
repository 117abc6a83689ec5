#include "attention.h"

#include <algorithm>
#include <cmath>

namespace fedrec::internal {

void attention_forward(const AttentionParams& p, std::span<const double> inputs,
                       std::size_t count, AttentionCache& cache,
                       std::span<double> out) {
  const std::size_t h = p.hidden;
  const std::size_t d = p.dim;
  cache.act.assign(count * h, 0.0);
  cache.alpha.assign(count, 0.0);

  double max_score = -INFINITY;
  for (std::size_t t = 0; t < count; ++t) {
    const double* x = inputs.data() + t * d;
    double* a = cache.act.data() + t * h;
    double score = 0.0;
    for (std::size_t r = 0; r < h; ++r) {
      const double* row = p.w.data() + r * d;
      double z = p.b[r];
      for (std::size_t c = 0; c < d; ++c) z += row[c] * x[c];
      a[r] = std::tanh(z);
      score += p.q[r] * a[r];
    }
    cache.alpha[t] = score;
    max_score = std::max(max_score, score);
  }
  double total = 0.0;
  for (double& s : cache.alpha) {
    s = std::exp(s - max_score);
    total += s;
  }
  for (double& s : cache.alpha) s /= total;

  std::fill(out.begin(), out.end(), 0.0);
  for (std::size_t t = 0; t < count; ++t) {
    const double* x = inputs.data() + t * d;
    for (std::size_t c = 0; c < d; ++c) out[c] += cache.alpha[t] * x[c];
  }
}

void attention_backward(const AttentionParams& p,
                        std::span<const double> inputs, std::size_t count,
                        const AttentionCache& cache,
                        std::span<const double> d_out, AttentionGrads grads,
                        std::span<double> d_inputs) {
  const std::size_t h = p.hidden;
  const std::size_t d = p.dim;

  // d alpha_t = d_out . x_t
  std::vector<double> d_alpha(count);
  double weighted = 0.0;
  for (std::size_t t = 0; t < count; ++t) {
    const double* x = inputs.data() + t * d;
    double s = 0.0;
    for (std::size_t c = 0; c < d; ++c) s += d_out[c] * x[c];
    d_alpha[t] = s;
    weighted += cache.alpha[t] * s;
  }

  std::vector<double> dz(h);
  for (std::size_t t = 0; t < count; ++t) {
    const double* x = inputs.data() + t * d;
    const double* a = cache.act.data() + t * h;
    double* dx = d_inputs.data() + t * d;
    const double alpha = cache.alpha[t];
    const double d_score = alpha * (d_alpha[t] - weighted);

    for (std::size_t c = 0; c < d; ++c) dx[c] += alpha * d_out[c];
    for (std::size_t r = 0; r < h; ++r) {
      grads.q[r] += d_score * a[r];
      dz[r] = d_score * p.q[r] * (1.0 - a[r] * a[r]);
      grads.b[r] += dz[r];
    }
    for (std::size_t r = 0; r < h; ++r) {
      if (dz[r] == 0.0) continue;
      const double* row = p.w.data() + r * d;
      double* grow = grads.w.data() + r * d;
      for (std::size_t c = 0; c < d; ++c) {
        grow[c] += dz[r] * x[c];
        dx[c] += dz[r] * row[c];
      }
    }
  }
}

}  // namespace fedrec::internal
