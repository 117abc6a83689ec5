#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "fedrec/data.h"
#include "fedrec/model.h"
#include "fedrec/params.h"

namespace fedrec {

struct EvalReport {
  double auc = 0.0;
  double mrr = 0.0;
  double ndcg5 = 0.0;
  double ndcg10 = 0.0;
  std::size_t impressions = 0;
  // Impressions excluded because they lack a positive or a negative.
  std::size_t skipped = 0;

  bool operator==(const EvalReport&) const = default;
};

// Probability that a random positive outranks a random negative; ties count
// one half. Requires at least one label of each class.
double auc(std::span<const double> scores, std::span<const std::uint8_t> labels);

// Mean reciprocal rank of the positives. Ranks follow descending score with
// ties broken by ascending input index.
double mrr(std::span<const double> scores, std::span<const std::uint8_t> labels);

// Binary-gain nDCG at cutoff k, same ordering convention as mrr().
double ndcg_at_k(std::span<const double> scores,
                 std::span<const std::uint8_t> labels, std::size_t k);

// Scores the shown items of one evaluation impression.
using ImpressionScorer =
    std::function<std::vector<double>(const EvalImpression&)>;

// Unweighted per-impression means over the corpus' evaluation impressions.
EvalReport evaluate_with(const Corpus& corpus, const ImpressionScorer& scorer);

EvalReport evaluate(const ParamVector& params, const RecModel& model,
                    const Corpus& corpus);

// Scores items by the generator's true user-topic affinity. Requires a
// synthetic corpus.
EvalReport evaluate_oracle(const Corpus& corpus);

// Product-moment correlation. Throws NumericError when either side has zero
// variance or fewer than two points.
double pearson_r(std::span<const double> xs, std::span<const double> ys);

// Correlation of dot-product news similarities under two parameter vectors
// across `n_pairs` distinct news pairs sampled with `seed`.
double similarity_drift(const RecModel& model, const ParamVector& a,
                        const ParamVector& b, const Corpus& corpus,
                        std::size_t n_pairs, std::uint64_t seed);

}  // namespace fedrec
