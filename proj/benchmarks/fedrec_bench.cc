#include <random>
#include <vector>

#include <benchmark/benchmark.h>

#include "fedrec/attacks.h"
#include "fedrec/data.h"
#include "fedrec/defenses.h"
#include "fedrec/fedcore.h"
#include "fedrec/metrics.h"
#include "fedrec/model.h"

namespace fedrec {
namespace {

std::vector<ModelUpdate> random_updates(std::size_t k, std::size_t dim) {
  std::mt19937_64 rng(1);
  std::normal_distribution<double> normal;
  const SegmentMap layout = SegmentMap::from_lengths(
      {{std::string(kNewsSegment), dim / 2},
       {std::string(kUserSegment), dim - dim / 2}});
  std::vector<ModelUpdate> out;
  for (std::size_t i = 0; i < k; ++i) {
    std::vector<double> delta(dim);
    for (double& x : delta) x = normal(rng);
    out.emplace_back(std::move(delta), layout, 1 + static_cast<std::int64_t>(i % 5));
  }
  return out;
}

void BM_Median(benchmark::State& state) {
  const auto us = random_updates(50, static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(median_agg(us));
}
BENCHMARK(BM_Median)->Arg(1 << 10)->Arg(1 << 14);

void BM_TrimmedMean(benchmark::State& state) {
  const auto us = random_updates(50, static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(trimmed_mean_agg(us, 0.1));
}
BENCHMARK(BM_TrimmedMean)->Arg(1 << 10)->Arg(1 << 14);

void BM_MultiKrum(benchmark::State& state) {
  const auto us = random_updates(static_cast<std::size_t>(state.range(0)), 1 << 12);
  const std::size_t f = default_krum_f(us.size());
  for (auto _ : state) {
    benchmark::DoNotOptimize(multi_krum_agg(us, f, us.size() - f - 2));
  }
}
BENCHMARK(BM_MultiKrum)->Arg(20)->Arg(50);

void BM_FedAvg(benchmark::State& state) {
  const auto us = random_updates(50, static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(fedavg_aggregate(us));
}
BENCHMARK(BM_FedAvg)->Arg(1 << 10)->Arg(1 << 14);

struct DeskFixture {
  Corpus corpus;
  std::unique_ptr<RecModel> model;
  ParamVector params;
  std::vector<TrainSample> samples;

  DeskFixture() : corpus(synth_generate(SynthSpec{}, 7)) {
    ModelConfig cfg;
    cfg.vocab_size = corpus.vocab.size();
    model = make_model(cfg);
    params = initial_params(*model, 1);
    std::mt19937_64 rng(2);
    samples = build_train_samples(corpus.clients[0], cfg.negatives, rng);
  }
};

const DeskFixture& desk() {
  static const DeskFixture fixture;
  return fixture;
}

void BM_ClientLossAndGrad(benchmark::State& state) {
  const DeskFixture& d = desk();
  for (auto _ : state) {
    benchmark::DoNotOptimize(
        d.model->client_loss_and_grad(d.params, d.samples, d.corpus));
  }
  state.counters["samples"] = static_cast<double>(d.samples.size());
}
BENCHMARK(BM_ClientLossAndGrad);

void BM_NewsSimilarityLoss(benchmark::State& state) {
  const DeskFixture& d = desk();
  const auto known = known_news_subset(d.corpus.news.size(), 1.0, 1);
  const NeighborTable table = select_news_neighbors(
      d.model->encode_all_news(d.params, d.corpus), known, 0);
  for (auto _ : state) {
    benchmark::DoNotOptimize(
        news_similarity_loss(*d.model, d.params, d.corpus, table));
  }
}
BENCHMARK(BM_NewsSimilarityLoss);

void BM_Evaluate(benchmark::State& state) {
  const DeskFixture& d = desk();
  for (auto _ : state) benchmark::DoNotOptimize(evaluate(d.params, *d.model, d.corpus));
}
BENCHMARK(BM_Evaluate);

}  // namespace
}  // namespace fedrec

BENCHMARK_MAIN();
