#include "fedrec/metrics.h"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <unordered_set>

#include "fedrec/error.h"

namespace fedrec {
namespace {

void check_aligned(std::span<const double> scores,
                   std::span<const std::uint8_t> labels) {
  if (scores.size() != labels.size()) {
    throw ContractViolation("scores and labels differ in length");
  }
}

// Indices sorted by descending score, ties by ascending index.
std::vector<std::size_t> ranking(std::span<const double> scores) {
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return scores[a] > scores[b];
  });
  return order;
}

}  // namespace

double auc(std::span<const double> scores,
           std::span<const std::uint8_t> labels) {
  check_aligned(scores, labels);
  const std::size_t n = scores.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return scores[a] < scores[b];
  });
  // Mann-Whitney U with mid-ranks; ranks are doubled to stay integral.
  double positives = 0.0;
  double rank_sum2 = 0.0;
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i;
    while (j + 1 < n && scores[order[j + 1]] == scores[order[i]]) ++j;
    const double mid_rank2 = static_cast<double>(i + 1 + j + 1);
    for (std::size_t k = i; k <= j; ++k) {
      if (labels[order[k]]) {
        positives += 1.0;
        rank_sum2 += mid_rank2;
      }
    }
    i = j + 1;
  }
  const double negatives = static_cast<double>(n) - positives;
  if (positives == 0.0 || negatives == 0.0) {
    throw ContractViolation("auc needs at least one positive and one negative");
  }
  const double u2 = rank_sum2 - positives * (positives + 1.0);
  return u2 / (2.0 * positives * negatives);
}

double mrr(std::span<const double> scores,
           std::span<const std::uint8_t> labels) {
  check_aligned(scores, labels);
  const auto order = ranking(scores);
  double sum = 0.0;
  std::size_t positives = 0;
  for (std::size_t r = 0; r < order.size(); ++r) {
    if (labels[order[r]]) {
      sum += 1.0 / static_cast<double>(r + 1);
      ++positives;
    }
  }
  if (positives == 0) throw ContractViolation("mrr needs a positive label");
  return sum / static_cast<double>(positives);
}

double ndcg_at_k(std::span<const double> scores,
                 std::span<const std::uint8_t> labels, std::size_t k) {
  check_aligned(scores, labels);
  const auto order = ranking(scores);
  const std::size_t cutoff = std::min(k, order.size());
  double dcg = 0.0;
  for (std::size_t r = 0; r < cutoff; ++r) {
    if (labels[order[r]]) dcg += 1.0 / std::log2(static_cast<double>(r + 2));
  }
  const std::size_t positives = static_cast<std::size_t>(
      std::count(labels.begin(), labels.end(), std::uint8_t{1}));
  double ideal = 0.0;
  for (std::size_t r = 0; r < std::min(cutoff, positives); ++r) {
    ideal += 1.0 / std::log2(static_cast<double>(r + 2));
  }
  if (ideal == 0.0) throw ContractViolation("ndcg needs a positive label");
  return dcg / ideal;
}

EvalReport evaluate_with(const Corpus& corpus, const ImpressionScorer& scorer) {
  EvalReport report;
  for (const EvalImpression& e : corpus.eval_impressions) {
    const Impression& imp = e.impression;
    const std::size_t pos = imp.positives();
    if (pos == 0 || pos == imp.shown.size()) {
      ++report.skipped;
      continue;
    }
    const std::vector<double> scores = scorer(e);
    report.auc += auc(scores, imp.clicked);
    report.mrr += mrr(scores, imp.clicked);
    report.ndcg5 += ndcg_at_k(scores, imp.clicked, 5);
    report.ndcg10 += ndcg_at_k(scores, imp.clicked, 10);
    ++report.impressions;
  }
  if (report.impressions == 0) {
    throw DataError("no evaluation impression has both labels");
  }
  const double n = static_cast<double>(report.impressions);
  report.auc /= n;
  report.mrr /= n;
  report.ndcg5 /= n;
  report.ndcg10 /= n;
  return report;
}

EvalReport evaluate(const ParamVector& params, const RecModel& model,
                    const Corpus& corpus) {
  const std::vector<NewsRepr> reprs = model.encode_all_news(params, corpus);
  return evaluate_with(corpus, [&](const EvalImpression& e) {
    const UserRepr user =
        model.encode_history(params, reprs, corpus.clients[e.client].history);
    std::vector<double> scores;
    scores.reserve(e.impression.shown.size());
    for (NewsIndex idx : e.impression.shown) {
      scores.push_back(dot(user, reprs[static_cast<std::size_t>(idx)]));
    }
    return scores;
  });
}

EvalReport evaluate_oracle(const Corpus& corpus) {
  if (!corpus.truth) throw DataError("oracle scoring needs a synthetic corpus");
  const SynthTruth& truth = *corpus.truth;
  return evaluate_with(corpus, [&](const EvalImpression& e) {
    std::vector<double> scores;
    for (NewsIndex idx : e.impression.shown) {
      scores.push_back(truth.user_affinity[e.client][static_cast<std::size_t>(
          truth.news_topic[static_cast<std::size_t>(idx)])]);
    }
    return scores;
  });
}

double pearson_r(std::span<const double> xs, std::span<const double> ys) {
  if (xs.size() != ys.size()) {
    throw ContractViolation("pearson_r: length mismatch");
  }
  if (xs.size() < 2) throw NumericError("pearson_r: need at least two points");
  const double n = static_cast<double>(xs.size());
  const double mx = std::accumulate(xs.begin(), xs.end(), 0.0) / n;
  const double my = std::accumulate(ys.begin(), ys.end(), 0.0) / n;
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double dx = xs[i] - mx;
    const double dy = ys[i] - my;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  if (sxx == 0.0 || syy == 0.0) {
    throw NumericError("pearson_r: zero variance, correlation undefined");
  }
  return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

double similarity_drift(const RecModel& model, const ParamVector& a,
                        const ParamVector& b, const Corpus& corpus,
                        std::size_t n_pairs, std::uint64_t seed) {
  const std::size_t n = corpus.news.size();
  const std::uint64_t total = static_cast<std::uint64_t>(n) * (n - 1) / 2;
  if (n < 2 || n_pairs < 2 || n_pairs > total) {
    throw ConfigError("similarity_drift: need 2 <= n_pairs <= " +
                      std::to_string(total));
  }
  std::mt19937_64 rng(seed);
  std::vector<std::pair<std::size_t, std::size_t>> pairs;
  pairs.reserve(n_pairs);
  if (2 * n_pairs > total) {
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = i + 1; j < n; ++j) pairs.emplace_back(i, j);
    }
    std::shuffle(pairs.begin(), pairs.end(), rng);
    pairs.resize(n_pairs);
  } else {
    std::unordered_set<std::uint64_t> seen;
    std::uniform_int_distribution<std::size_t> pick(0, n - 1);
    while (pairs.size() < n_pairs) {
      std::size_t i = pick(rng);
      std::size_t j = pick(rng);
      if (i == j) continue;
      if (i > j) std::swap(i, j);
      if (seen.insert(static_cast<std::uint64_t>(i) * n + j).second) {
        pairs.emplace_back(i, j);
      }
    }
  }
  const auto reprs_a = model.encode_all_news(a, corpus);
  const auto reprs_b = model.encode_all_news(b, corpus);
  std::vector<double> xs, ys;
  xs.reserve(n_pairs);
  ys.reserve(n_pairs);
  for (const auto& [i, j] : pairs) {
    xs.push_back(dot(reprs_a[i], reprs_a[j]));
    ys.push_back(dot(reprs_b[i], reprs_b[j]));
  }
  return pearson_r(xs, ys);
}

}  // namespace fedrec
